#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "asba/mol_graph.hpp"

namespace asba {

struct SubgraphPattern {
  MolGraph graph;  // stored in canonical atom order
  std::string code;
  int index = 0;
  long long frequency = 0;
};

struct SubgraphVocabulary {
  std::vector<SubgraphPattern> patterns;
  std::vector<int> atom_alphabet;  // type codes with single-atom patterns
  int cap = kDefaultPatternCap;
  uint64_t corpus_hash = 0;

  int size() const { return static_cast<int>(patterns.size()); }
  bool has_atom_type(int type) const;
  // -1 when the code is not in the vocabulary
  int index_of(const std::string& code) const;

  void save(const std::string& path) const;
  static SubgraphVocabulary load(const std::string& path);

 private:
  mutable std::unordered_map<std::string, int> code_index_;
  void rebuild_index() const;
};

struct DecompositionPart {
  int token = -1;       // vocabulary index; -1 for molecule-local parts
  bool local = false;   // true when the part has no vocabulary token
  std::vector<int> atoms;  // ascending
};

// Partition of a molecule into non-overlapping connected parts plus the
// bonds whose endpoints land in different parts.
struct Decomposition {
  std::vector<DecompositionPart> parts;
  std::vector<int> inter_bonds;  // indices into the molecule's bond list

  int num_parts() const { return static_cast<int>(parts.size()); }
};

// part index per atom, -1 if uncovered
std::vector<int> part_assignment(const MolGraph& g, const Decomposition& d);

// Checks disjointness, full coverage, intra-xor-inter bond classification,
// part connectivity, and (for vocabulary parts) isomorphism with the token's
// pattern. Returns false and sets `why` on the first violation.
bool validate_decomposition(const MolGraph& g, const Decomposition& d,
                            const SubgraphVocabulary* vocab, std::string* why);

// --- subgraph matching --------------------------------------------------------

// First injective, type- and order-preserving, induced (edge-exact) embedding
// of `pattern` into `host` restricted to the `allowed` atoms, or nullopt.
// Deterministic: pattern vertices are extended smallest-index-first along the
// connected order, host candidates tried in ascending index order.
std::optional<std::vector<int>> match_subgraph(const MolGraph& pattern, const MolGraph& host,
                                               const std::vector<bool>& allowed);
std::optional<std::vector<int>> match_subgraph(const MolGraph& pattern, const MolGraph& host);

// Number of distinct atom sets of `host` whose induced subgraph is
// isomorphic to `pattern`.
long long count_induced_occurrences(const MolGraph& pattern, const MolGraph& host);

// --- vocabulary mining ----------------------------------------------------------

uint64_t corpus_hash(const std::vector<MolGraph>& corpus);

// Frequency-greedy pair merging: start from single atoms, repeatedly merge the
// most frequent adjacent-fragment pair pattern (ties: smallest canonical code)
// until the vocabulary reaches `target_size` or no candidate occurs twice.
// Recorded frequencies are corpus occurrence counts of each pattern.
SubgraphVocabulary mine_vocabulary(const std::vector<MolGraph>& corpus, int target_size,
                                   int cap = kDefaultPatternCap);

// Greedy cover with the largest patterns first (ties: lower index); matches
// are claimed in deterministic order until single atoms finish the cover.
Decomposition decompose(const MolGraph& g, const SubgraphVocabulary& vocab);

// --- rule-based fragmentation -----------------------------------------------------

struct BondContext {
  int type_u = 0;
  int type_v = 0;
  bool ring_u = false;
  bool ring_v = false;
  bool on_ring = false;  // bond lies on a cycle
  int order = 1;
};

using CleavageRule = std::function<bool(const BondContext&)>;

struct CleavageRuleSet {
  std::vector<CleavageRule> rules;
  bool matches(const BondContext& ctx) const;
};

// acyclic ring-to-chain single bonds, plus acyclic single C-N and C-O bonds
CleavageRuleSet default_cleavage_rules();

// Deletes every bond matching a rule; connected components become parts.
// Components with a vocabulary pattern get its token, others are local.
Decomposition fragment_rules(const MolGraph& g, const CleavageRuleSet& rules,
                             const SubgraphVocabulary* vocab = nullptr);

// --- quotient graph ----------------------------------------------------------------

// One node per part; parallel inter-part bonds collapse into a single edge
// whose feature is the maximum bond order.
struct QuotientGraph {
  std::vector<int> tokens;  // per node: part token (or -1)
  std::vector<Bond> edges;  // u < v, sorted
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  int num_nodes() const { return static_cast<int>(tokens.size()); }
};

QuotientGraph quotient_graph(const MolGraph& g, const Decomposition& d);

}  // namespace asba
