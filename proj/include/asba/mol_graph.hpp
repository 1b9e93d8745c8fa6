#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asba/errors.hpp"

namespace asba {

// Supported atom alphabet, codes in alphabetical symbol order.
inline constexpr int kAtomAlphabetSize = 10;
inline constexpr int kDefaultPatternCap = 12;

int atom_type_from_symbol(const std::string& symbol);       // throws UnknownAtomSymbol
std::optional<int> try_atom_type(const std::string& symbol);
const char* atom_symbol(int type_code);

struct Bond {
  int u = 0;
  int v = 0;
  int order = 1;  // {1,2,3}

  friend bool operator==(const Bond&, const Bond&) = default;
};

// Attributed undirected molecular graph. Immutable after build(); bonds are
// stored once with u < v and sorted, adjacency lists sorted by neighbor.
class MolGraph {
 public:
  MolGraph() = default;
  static MolGraph build(std::vector<int> atom_types, std::vector<Bond> bonds);

  int num_atoms() const { return static_cast<int>(atom_types_.size()); }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }
  int atom_type(int v) const { return atom_types_[v]; }
  int degree(int v) const { return static_cast<int>(adjacency_[v].size()); }
  const std::vector<int>& atom_types() const { return atom_types_; }
  const std::vector<Bond>& bonds() const { return bonds_; }
  // (neighbor, bond order) pairs, ascending by neighbor
  const std::vector<std::pair<int, int>>& neighbors(int v) const { return adjacency_[v]; }
  // 0 if u and v are not bonded
  int bond_order_between(int u, int v) const;

  // node feature vector: (atom type index, degree)
  std::array<int, 2> node_features(int v) const { return {atom_types_[v], degree(v)}; }

  // induced subgraph on `atoms` (ascending order defines the new indexing)
  MolGraph induced_subgraph(const std::vector<int>& atoms) const;

  friend bool operator==(const MolGraph&, const MolGraph&) = default;

 private:
  std::vector<int> atom_types_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;
};

// --- parsing ----------------------------------------------------------------

// One native molecule object: {"atoms": [...], "bonds": [[u,v,order],...],
// optional "labels": [0|1|null,...], optional "target": real}.
struct ParsedMolecule {
  MolGraph graph;
  std::vector<int> labels;  // 0/1, -1 for missing; empty if absent
  std::optional<double> target;
};

ParsedMolecule parse_native(const nlohmann::json& doc);
ParsedMolecule parse_native(const std::string& line);
nlohmann::json serialize_native(const MolGraph& g, const std::vector<int>* labels = nullptr,
                                const double* target = nullptr);

// Subset SMILES: atoms B,C,N,O,P,S,F,I,Cl,Br; bonds -,=,#; branches; ring
// closure digits 1-9. No aromaticity, charges, brackets, or stereo.
MolGraph parse_smiles_subset(const std::string& s);

// --- canonicalization -------------------------------------------------------

struct CanonicalForm {
  MolGraph graph;           // atoms renumbered to canonical positions
  std::vector<int> order;   // order[pos] = original atom index
  std::string code;         // encoding bytes; total order is lexicographic
};

// Exact canonicalization for graphs of at most `cap` atoms (PatternTooLarge
// otherwise): equitable partition refinement by (type, degree) and neighbor
// signatures, then individualization search taking the smallest encoding.
CanonicalForm canonical_form(const MolGraph& g, int cap = kDefaultPatternCap);
std::string canonical_code(const MolGraph& g, int cap = kDefaultPatternCap);

// Labeling-invariant atom order for whole molecules (same search, no size
// cap beyond 255 atoms). perm[old_index] = canonical position. Anything that
// must not depend on input atom numbering (the greedy cover) runs in this
// frame.
std::vector<int> canonical_order(const MolGraph& g);

std::string code_to_hex(const std::string& code);
std::string code_from_hex(const std::string& hex);

// --- structure queries ------------------------------------------------------

// per-bond flag: true if the bond lies on no cycle
std::vector<bool> bridge_mask(const MolGraph& g);
// ascending indices of atoms lying on at least one cycle
std::vector<int> ring_atoms(const MolGraph& g);
std::vector<bool> ring_atom_mask(const MolGraph& g);

// Scaffold key: canonical code of the graph left after iteratively deleting
// degree<=1 non-ring atoms; acyclic molecules fall back to the whole-molecule
// code. Structures beyond the cap degrade to a lossy (atom multiset, bond
// count) key.
std::string scaffold_key(const MolGraph& g, int cap = kDefaultPatternCap);

// perm[old_index] = new_index; must be a bijection on [0, |V|)
MolGraph relabel(const MolGraph& g, const std::vector<int>& perm);

// --- file helpers -------------------------------------------------------------

std::vector<ParsedMolecule> load_native_file(const std::string& path);
std::vector<MolGraph> load_smiles_file(const std::string& path);
// sniffs the format from the first data line ('{' = native, otherwise SMILES)
std::vector<ParsedMolecule> load_molecule_file(const std::string& path);

}  // namespace asba
