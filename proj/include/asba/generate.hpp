#pragma once

#include <string>
#include <vector>

#include "asba/mol_graph.hpp"
#include "asba/rng.hpp"

namespace asba {

// Desk-scale synthetic molecule generators. Both kinds emit native-format
// molecules with a single binary label:
//   atoms: fixed-size (12 atom) molecules; label = [at least 3 nitrogens].
//   motif: label = [contains the planted 5-ring C-N-O-C-S as an induced
//          subgraph]; negatives are rejection-sampled so the label is exact.
struct GeneratedMolecule {
  MolGraph graph;
  int label = 0;
};

// the planted functional-group pattern used by the motif task
MolGraph motif_pattern();

std::vector<GeneratedMolecule> generate_atom_count_task(int n, Rng& rng);
std::vector<GeneratedMolecule> generate_motif_task(int n, Rng& rng);

void write_generated(const std::vector<GeneratedMolecule>& mols, const std::string& path,
                     bool with_labels = true);

}  // namespace asba
