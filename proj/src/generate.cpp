#include "asba/generate.hpp"

#include <algorithm>
#include <fstream>

#include "asba/fragment.hpp"

namespace asba {

namespace {

const int kC = atom_type_from_symbol("C");
const int kN = atom_type_from_symbol("N");
const int kO = atom_type_from_symbol("O");
const int kS = atom_type_from_symbol("S");
const int kF = atom_type_from_symbol("F");

constexpr int kMaxDegree = 4;

// random tree over the given atom types, occasional double bonds and one
// optional extra ring-closing bond; degrees capped at 4
MolGraph random_skeleton(const std::vector<int>& types, Rng& rng, double double_bond_prob,
                         double ring_prob) {
  const int n = static_cast<int>(types.size());
  std::vector<Bond> bonds;
  std::vector<int> degree(n, 0);
  for (int v = 1; v < n; ++v) {
    std::vector<int> eligible;
    for (int u = 0; u < v; ++u) {
      if (degree[u] < kMaxDegree) eligible.push_back(u);
    }
    const int parent = eligible[rng.uniform_int(eligible.size())];
    const int order = rng.uniform() < double_bond_prob ? 2 : 1;
    bonds.push_back({parent, v, order});
    degree[parent]++;
    degree[v]++;
  }
  if (n >= 4 && rng.uniform() < ring_prob) {
    // one extra single bond between non-adjacent atoms closes a ring
    for (int attempt = 0; attempt < 8; ++attempt) {
      const int a = static_cast<int>(rng.uniform_int(n));
      const int b = static_cast<int>(rng.uniform_int(n));
      if (a == b || degree[a] >= kMaxDegree || degree[b] >= kMaxDegree) continue;
      bool adjacent = false;
      for (const auto& bond : bonds) {
        if ((bond.u == std::min(a, b)) && (bond.v == std::max(a, b))) adjacent = true;
      }
      if (adjacent) continue;
      bonds.push_back({a, b, 1});
      degree[a]++;
      degree[b]++;
      break;
    }
  }
  return MolGraph::build(types, std::move(bonds));
}

int weighted_type(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.55) return kC;
  if (u < 0.70) return kN;
  if (u < 0.85) return kO;
  if (u < 0.95) return kS;
  return kF;
}

MolGraph random_decoy(int size, Rng& rng) {
  std::vector<int> types(size);
  for (int& t : types) t = weighted_type(rng);
  return random_skeleton(types, rng, 0.15, 0.4);
}

}  // namespace

MolGraph motif_pattern() {
  // 5-ring C-N-O-C-S, all single bonds
  return MolGraph::build({kC, kN, kO, kC, kS},
                         {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}, {3, 4, 1}, {0, 4, 1}});
}

std::vector<GeneratedMolecule> generate_atom_count_task(int n, Rng& rng) {
  constexpr int kSize = 12;
  constexpr int kThreshold = 3;  // label = [#N >= 3]
  std::vector<GeneratedMolecule> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int nitrogens = static_cast<int>(rng.uniform_int(6));  // 0..5
    std::vector<int> types(kSize, kC);
    for (int k = 0; k < kSize; ++k) {
      const double u = rng.uniform();
      if (u < 0.2) types[k] = kO;
      else if (u < 0.3) types[k] = kS;
    }
    std::vector<int> slots(kSize);
    for (int k = 0; k < kSize; ++k) slots[k] = k;
    rng.shuffle(slots);
    for (int k = 0; k < nitrogens; ++k) types[slots[k]] = kN;
    GeneratedMolecule m;
    m.graph = random_skeleton(types, rng, 0.1, 0.3);
    m.label = nitrogens >= kThreshold ? 1 : 0;
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<GeneratedMolecule> generate_motif_task(int n, Rng& rng) {
  const MolGraph motif = motif_pattern();
  std::vector<GeneratedMolecule> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    GeneratedMolecule m;
    m.label = rng.uniform() < 0.5 ? 1 : 0;
    if (m.label == 1) {
      // decoy plus the motif ring, attached by one single bond
      const int decoy_size = 5 + static_cast<int>(rng.uniform_int(4));  // 5..8
      const MolGraph decoy = random_decoy(decoy_size, rng);
      std::vector<int> types = decoy.atom_types();
      std::vector<Bond> bonds = decoy.bonds();
      const int offset = decoy.num_atoms();
      for (int v = 0; v < motif.num_atoms(); ++v) types.push_back(motif.atom_type(v));
      for (const auto& b : motif.bonds()) bonds.push_back({b.u + offset, b.v + offset, b.order});
      const int anchor = static_cast<int>(rng.uniform_int(decoy.num_atoms()));
      const int ring_atom = offset + static_cast<int>(rng.uniform_int(motif.num_atoms()));
      bonds.push_back({anchor, ring_atom, 1});
      m.graph = MolGraph::build(std::move(types), std::move(bonds));
    } else {
      // same size range as positives; resample until the motif is absent
      const int size = 10 + static_cast<int>(rng.uniform_int(4));  // 10..13
      while (true) {
        m.graph = random_decoy(size, rng);
        if (!match_subgraph(motif, m.graph)) break;
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_generated(const std::vector<GeneratedMolecule>& mols, const std::string& path,
                     bool with_labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::FileError, "cannot write '" + path + "'");
  for (const auto& m : mols) {
    std::vector<int> labels{m.label};
    out << serialize_native(m.graph, with_labels ? &labels : nullptr).dump() << "\n";
  }
}

}  // namespace asba
