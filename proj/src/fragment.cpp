#include "asba/fragment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "asba/rng.hpp"

namespace asba {

// --- vocabulary ----------------------------------------------------------------

bool SubgraphVocabulary::has_atom_type(int type) const {
  return std::find(atom_alphabet.begin(), atom_alphabet.end(), type) != atom_alphabet.end();
}

int SubgraphVocabulary::index_of(const std::string& code) const {
  if (code_index_.size() != patterns.size()) rebuild_index();
  auto it = code_index_.find(code);
  return it == code_index_.end() ? -1 : it->second;
}

void SubgraphVocabulary::rebuild_index() const {
  code_index_.clear();
  for (const auto& p : patterns) code_index_[p.code] = p.index;
}

void SubgraphVocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::FileError, "cannot write '" + path + "'");
  nlohmann::json header;
  header["cap"] = cap;
  auto& alph = header["alphabet"] = nlohmann::json::array();
  for (int t : atom_alphabet) alph.push_back(atom_symbol(t));
  header["corpus_hash"] = to_hex(corpus_hash);
  header["patterns"] = size();
  out << header.dump() << "\n";
  for (const auto& p : patterns) {
    nlohmann::json line;
    line["index"] = p.index;
    line["code"] = code_to_hex(p.code);
    auto& atoms = line["atoms"] = nlohmann::json::array();
    for (int v = 0; v < p.graph.num_atoms(); ++v) atoms.push_back(atom_symbol(p.graph.atom_type(v)));
    auto& bonds = line["bonds"] = nlohmann::json::array();
    for (const auto& b : p.graph.bonds()) bonds.push_back({b.u, b.v, b.order});
    line["frequency"] = p.frequency;
    out << line.dump() << "\n";
  }
}

SubgraphVocabulary SubgraphVocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MalformedDocument, "empty vocabulary file");
  nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || !header.contains("cap")) {
    fail(ErrorCode::MalformedDocument, "bad vocabulary header");
  }
  SubgraphVocabulary vocab;
  vocab.cap = header["cap"].get<int>();
  for (const auto& s : header["alphabet"]) vocab.atom_alphabet.push_back(atom_type_from_symbol(s));
  vocab.corpus_hash = std::stoull(header["corpus_hash"].get<std::string>(), nullptr, 16);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded()) fail(ErrorCode::MalformedDocument, "bad vocabulary line");
    SubgraphPattern p;
    p.index = doc["index"].get<int>();
    p.code = code_from_hex(doc["code"].get<std::string>());
    std::vector<int> types;
    for (const auto& s : doc["atoms"]) types.push_back(atom_type_from_symbol(s));
    std::vector<Bond> bonds;
    for (const auto& b : doc["bonds"]) bonds.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
    p.graph = MolGraph::build(std::move(types), std::move(bonds));
    if (canonical_code(p.graph, vocab.cap) != p.code) {
      fail(ErrorCode::MalformedDocument, "pattern " + std::to_string(p.index) + " code mismatch");
    }
    p.frequency = doc["frequency"].get<long long>();
    if (p.index != vocab.size()) {
      fail(ErrorCode::MalformedDocument, "pattern indices out of order at " + std::to_string(p.index));
    }
    vocab.patterns.push_back(std::move(p));
  }
  return vocab;
}

// --- matching -------------------------------------------------------------------

namespace {

// connected visit order for pattern vertices: start at 0, extend by the
// smallest-index vertex adjacent to the ordered prefix
std::vector<int> pattern_order(const MolGraph& pattern) {
  const int n = pattern.num_atoms();
  std::vector<int> order;
  std::vector<bool> placed(n, false);
  order.push_back(0);
  placed[0] = true;
  while (static_cast<int>(order.size()) < n) {
    int next = -1;
    for (int v = 0; v < n && next < 0; ++v) {
      if (placed[v]) continue;
      for (auto [u, _] : pattern.neighbors(v)) {
        if (placed[u]) {
          next = v;
          break;
        }
      }
    }
    if (next < 0) {
      // disconnected pattern: fall back to smallest unplaced vertex
      for (int v = 0; v < n; ++v) {
        if (!placed[v]) {
          next = v;
          break;
        }
      }
    }
    order.push_back(next);
    placed[next] = true;
  }
  return order;
}

struct Matcher {
  const MolGraph& pattern;
  const MolGraph& host;
  const std::vector<bool>& allowed;
  std::vector<int> order;            // pattern visit order
  std::vector<int> map;              // pattern atom -> host atom (-1 unset)
  std::vector<bool> used;            // host atoms taken
  const std::function<bool(const std::vector<int>&)>& emit;  // return true to stop

  bool feasible(int p, int h) const {
    if (pattern.atom_type(p) != host.atom_type(h)) return false;
    // induced exactness against every already-mapped pattern atom
    for (int q = 0; q < pattern.num_atoms(); ++q) {
      if (map[q] < 0 || q == p) continue;
      if (pattern.bond_order_between(p, q) != host.bond_order_between(h, map[q])) return false;
    }
    return true;
  }

  bool extend(size_t k) {
    if (k == order.size()) return emit(map);
    const int p = order[k];
    if (k == 0) {
      for (int h = 0; h < host.num_atoms(); ++h) {
        if (!allowed[h] || used[h] || !feasible(p, h)) continue;
        map[p] = h;
        used[h] = true;
        if (extend(k + 1)) return true;
        used[h] = false;
        map[p] = -1;
      }
      return false;
    }
    // anchor on the first ordered neighbor; candidates come from its image
    int anchor = -1;
    for (size_t i = 0; i < k && anchor < 0; ++i) {
      if (pattern.bond_order_between(p, order[i]) != 0) anchor = order[i];
    }
    if (anchor < 0) {
      for (int h = 0; h < host.num_atoms(); ++h) {
        if (!allowed[h] || used[h] || !feasible(p, h)) continue;
        map[p] = h;
        used[h] = true;
        if (extend(k + 1)) return true;
        used[h] = false;
        map[p] = -1;
      }
      return false;
    }
    for (auto [h, _] : host.neighbors(map[anchor])) {  // ascending by index
      if (!allowed[h] || used[h] || !feasible(p, h)) continue;
      map[p] = h;
      used[h] = true;
      if (extend(k + 1)) return true;
      used[h] = false;
      map[p] = -1;
    }
    return false;
  }
};

void for_each_match(const MolGraph& pattern, const MolGraph& host, const std::vector<bool>& allowed,
                    const std::function<bool(const std::vector<int>&)>& emit) {
  if (pattern.num_atoms() == 0 || pattern.num_atoms() > host.num_atoms()) return;
  Matcher m{pattern, host, allowed, pattern_order(pattern),
            std::vector<int>(pattern.num_atoms(), -1), std::vector<bool>(host.num_atoms(), false),
            emit};
  m.extend(0);
}

}  // namespace

std::optional<std::vector<int>> match_subgraph(const MolGraph& pattern, const MolGraph& host,
                                               const std::vector<bool>& allowed) {
  std::optional<std::vector<int>> found;
  for_each_match(pattern, host, allowed, [&](const std::vector<int>& map) {
    found = map;
    return true;
  });
  return found;
}

std::optional<std::vector<int>> match_subgraph(const MolGraph& pattern, const MolGraph& host) {
  return match_subgraph(pattern, host, std::vector<bool>(host.num_atoms(), true));
}

long long count_induced_occurrences(const MolGraph& pattern, const MolGraph& host) {
  std::set<std::vector<int>> seen;
  std::vector<bool> allowed(host.num_atoms(), true);
  for_each_match(pattern, host, allowed, [&](const std::vector<int>& map) {
    std::vector<int> atoms = map;
    std::sort(atoms.begin(), atoms.end());
    seen.insert(std::move(atoms));
    return false;
  });
  return static_cast<long long>(seen.size());
}

// --- mining ---------------------------------------------------------------------

uint64_t corpus_hash(const std::vector<MolGraph>& corpus) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& g : corpus) {
    h = fnv1a64(serialize_native(g).dump(), h);
    h = fnv1a64("\n", h);
  }
  return h;
}

namespace {

long long corpus_occurrences(const MolGraph& pattern, const std::vector<MolGraph>& corpus) {
  long long total = 0;
  for (const auto& g : corpus) total += count_induced_occurrences(pattern, g);
  return total;
}

struct FragmentState {
  // fragment id per atom; fragments are atom sets
  std::vector<int> frag_of;
  std::vector<std::vector<int>> members;
};

}  // namespace

SubgraphVocabulary mine_vocabulary(const std::vector<MolGraph>& corpus, int target_size, int cap) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "no molecules to mine");

  SubgraphVocabulary vocab;
  vocab.cap = cap;
  vocab.corpus_hash = corpus_hash(corpus);

  std::set<int> types_present;
  for (const auto& g : corpus) {
    for (int t : g.atom_types()) types_present.insert(t);
  }
  if (target_size < static_cast<int>(types_present.size())) {
    fail(ErrorCode::TargetTooSmall, "target " + std::to_string(target_size) + " below alphabet size " +
                                        std::to_string(types_present.size()));
  }
  for (int t : types_present) {
    SubgraphPattern p;
    p.graph = MolGraph::build({t}, {});
    p.code = canonical_code(p.graph, cap);
    p.index = vocab.size();
    p.frequency = 0;
    for (const auto& g : corpus) {
      for (int at : g.atom_types()) {
        if (at == t) p.frequency++;
      }
    }
    vocab.patterns.push_back(std::move(p));
    vocab.atom_alphabet.push_back(t);
  }

  std::vector<FragmentState> states(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    const int n = corpus[i].num_atoms();
    states[i].frag_of.resize(n);
    states[i].members.resize(n);
    for (int v = 0; v < n; ++v) {
      states[i].frag_of[v] = v;
      states[i].members[v] = {v};
    }
  }

  std::set<std::string> in_vocab;
  for (const auto& p : vocab.patterns) in_vocab.insert(p.code);

  while (vocab.size() < target_size) {
    // count candidate patterns over distinct adjacent fragment pairs
    std::map<std::string, long long> counts;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& g = corpus[i];
      const auto& st = states[i];
      std::set<std::pair<int, int>> pairs;
      for (const auto& b : g.bonds()) {
        int fu = st.frag_of[b.u], fv = st.frag_of[b.v];
        if (fu == fv) continue;
        pairs.insert({std::min(fu, fv), std::max(fu, fv)});
      }
      for (auto [fa, fb] : pairs) {
        std::vector<int> atoms = st.members[fa];
        atoms.insert(atoms.end(), st.members[fb].begin(), st.members[fb].end());
        if (static_cast<int>(atoms.size()) > cap) continue;
        counts[canonical_code(g.induced_subgraph(atoms), cap)]++;
      }
    }
    std::string best_code;
    long long best_count = 0;
    for (const auto& [code, count] : counts) {
      if (in_vocab.count(code)) continue;
      if (count > best_count || (count == best_count && count > 0 && code < best_code)) {
        best_code = code;
        best_count = count;
      }
    }
    if (best_count < 2) break;

    // merge every non-overlapping occurrence, molecule order then lowest
    // union atom index, first-come
    MolGraph pattern_graph;
    bool have_pattern = false;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& g = corpus[i];
      auto& st = states[i];
      std::set<std::pair<int, int>> pairs;
      for (const auto& b : g.bonds()) {
        int fu = st.frag_of[b.u], fv = st.frag_of[b.v];
        if (fu == fv) continue;
        pairs.insert({std::min(fu, fv), std::max(fu, fv)});
      }
      struct Occurrence {
        int min_atom;
        int fa, fb;
        std::vector<int> atoms;
      };
      std::vector<Occurrence> occs;
      for (auto [fa, fb] : pairs) {
        std::vector<int> atoms = st.members[fa];
        atoms.insert(atoms.end(), st.members[fb].begin(), st.members[fb].end());
        if (static_cast<int>(atoms.size()) > cap) continue;
        std::sort(atoms.begin(), atoms.end());
        if (canonical_code(g.induced_subgraph(atoms), cap) != best_code) continue;
        occs.push_back({atoms[0], fa, fb, std::move(atoms)});
      }
      std::sort(occs.begin(), occs.end(),
                [](const Occurrence& a, const Occurrence& b) { return a.min_atom < b.min_atom; });
      std::set<int> consumed;
      for (const auto& occ : occs) {
        if (consumed.count(occ.fa) || consumed.count(occ.fb)) continue;
        consumed.insert(occ.fa);
        consumed.insert(occ.fb);
        if (!have_pattern) {
          pattern_graph = canonical_form(g.induced_subgraph(occ.atoms), cap).graph;
          have_pattern = true;
        }
        // fold fb into fa
        for (int a : st.members[occ.fb]) st.frag_of[a] = occ.fa;
        st.members[occ.fa] = occ.atoms;
        st.members[occ.fb].clear();
      }
    }

    SubgraphPattern p;
    p.graph = std::move(pattern_graph);
    p.code = best_code;
    p.index = vocab.size();
    p.frequency = corpus_occurrences(p.graph, corpus);
    in_vocab.insert(p.code);
    vocab.patterns.push_back(std::move(p));
  }
  return vocab;
}

// --- decomposition ----------------------------------------------------------------

std::vector<int> part_assignment(const MolGraph& g, const Decomposition& d) {
  std::vector<int> part_of(g.num_atoms(), -1);
  for (int t = 0; t < d.num_parts(); ++t) {
    for (int a : d.parts[t].atoms) {
      if (a < 0 || a >= g.num_atoms()) fail(ErrorCode::IndexOutOfRange, "part atom " + std::to_string(a));
      part_of[a] = t;
    }
  }
  return part_of;
}

Decomposition decompose(const MolGraph& g, const SubgraphVocabulary& vocab) {
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (!vocab.has_atom_type(g.atom_type(v))) {
      fail(ErrorCode::UncoveredAtomType,
           std::string("atom ") + std::to_string(v) + " type '" + atom_symbol(g.atom_type(v)) +
               "' not in vocabulary alphabet");
    }
  }
  // the cover runs in the molecule's canonical frame so that relabeling the
  // input yields the same parts mapped through the permutation
  const std::vector<int> perm = canonical_order(g);
  std::vector<int> inverse(perm.size());
  for (size_t v = 0; v < perm.size(); ++v) inverse[perm[v]] = static_cast<int>(v);
  const MolGraph canon = relabel(g, perm);

  std::vector<int> pattern_order(vocab.size());
  for (int i = 0; i < vocab.size(); ++i) pattern_order[i] = i;
  std::stable_sort(pattern_order.begin(), pattern_order.end(), [&](int a, int b) {
    return vocab.patterns[a].graph.num_atoms() > vocab.patterns[b].graph.num_atoms();
  });

  Decomposition d;
  std::vector<bool> uncovered(canon.num_atoms(), true);
  int remaining = canon.num_atoms();
  for (int pi : pattern_order) {
    if (remaining == 0) break;
    const auto& pattern = vocab.patterns[pi].graph;
    if (pattern.num_atoms() > remaining) continue;
    while (true) {
      auto m = match_subgraph(pattern, canon, uncovered);
      if (!m) break;
      DecompositionPart part;
      part.token = vocab.patterns[pi].index;
      for (int a : *m) {
        uncovered[a] = false;
        part.atoms.push_back(inverse[a]);
      }
      std::sort(part.atoms.begin(), part.atoms.end());
      remaining -= pattern.num_atoms();
      d.parts.push_back(std::move(part));
      if (remaining < pattern.num_atoms()) break;
    }
  }
  const auto part_of = part_assignment(g, d);
  for (int i = 0; i < g.num_bonds(); ++i) {
    const auto& b = g.bonds()[i];
    if (part_of[b.u] != part_of[b.v]) d.inter_bonds.push_back(i);
  }
  return d;
}

bool validate_decomposition(const MolGraph& g, const Decomposition& d,
                            const SubgraphVocabulary* vocab, std::string* why) {
  auto complain = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  std::vector<int> seen(g.num_atoms(), -1);
  for (int t = 0; t < d.num_parts(); ++t) {
    for (int a : d.parts[t].atoms) {
      if (a < 0 || a >= g.num_atoms()) return complain("atom index out of range");
      if (seen[a] >= 0) return complain("atom " + std::to_string(a) + " in two parts");
      seen[a] = t;
    }
  }
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (seen[v] < 0) return complain("atom " + std::to_string(v) + " uncovered");
  }
  std::set<int> inter(d.inter_bonds.begin(), d.inter_bonds.end());
  for (int i = 0; i < g.num_bonds(); ++i) {
    const auto& b = g.bonds()[i];
    const bool crosses = seen[b.u] != seen[b.v];
    if (crosses != (inter.count(i) > 0)) {
      return complain("bond " + std::to_string(i) + " misclassified");
    }
  }
  for (int t = 0; t < d.num_parts(); ++t) {
    const auto& part = d.parts[t];
    MolGraph sub = g.induced_subgraph(part.atoms);
    // connectivity via BFS
    if (sub.num_atoms() == 0) return complain("empty part " + std::to_string(t));
    std::vector<bool> visited(sub.num_atoms(), false);
    std::vector<int> stack{0};
    visited[0] = true;
    int count = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [u, _] : sub.neighbors(v)) {
        if (!visited[u]) {
          visited[u] = true;
          count++;
          stack.push_back(u);
        }
      }
    }
    if (count != sub.num_atoms()) return complain("part " + std::to_string(t) + " disconnected");
    if (vocab && !part.local) {
      if (part.token < 0 || part.token >= vocab->size()) {
        return complain("part " + std::to_string(t) + " token out of range");
      }
      if (canonical_code(sub, vocab->cap) != vocab->patterns[part.token].code) {
        return complain("part " + std::to_string(t) + " not isomorphic to its pattern");
      }
    }
  }
  return true;
}

// --- rule-based fragmentation --------------------------------------------------------

bool CleavageRuleSet::matches(const BondContext& ctx) const {
  for (const auto& rule : rules) {
    if (rule(ctx)) return true;
  }
  return false;
}

CleavageRuleSet default_cleavage_rules() {
  CleavageRuleSet set;
  set.rules.push_back([](const BondContext& c) {
    return !c.on_ring && c.order == 1 && (c.ring_u != c.ring_v);
  });
  const int kC = atom_type_from_symbol("C");
  const int kN = atom_type_from_symbol("N");
  const int kO = atom_type_from_symbol("O");
  set.rules.push_back([kC, kN, kO](const BondContext& c) {
    if (c.on_ring || c.order != 1) return false;
    const bool cn = (c.type_u == kC && c.type_v == kN) || (c.type_u == kN && c.type_v == kC);
    const bool co = (c.type_u == kC && c.type_v == kO) || (c.type_u == kO && c.type_v == kC);
    return cn || co;
  });
  return set;
}

Decomposition fragment_rules(const MolGraph& g, const CleavageRuleSet& rules,
                             const SubgraphVocabulary* vocab) {
  const auto bridges = bridge_mask(g);
  const auto ring = ring_atom_mask(g);
  std::vector<bool> cleaved(g.num_bonds(), false);
  for (int i = 0; i < g.num_bonds(); ++i) {
    const auto& b = g.bonds()[i];
    BondContext ctx{g.atom_type(b.u), g.atom_type(b.v), ring[b.u], ring[b.v], !bridges[i], b.order};
    cleaved[i] = rules.matches(ctx);
  }
  // connected components of the uncleaved graph, ordered by smallest atom
  std::vector<int> comp(g.num_atoms(), -1);
  std::vector<std::vector<int>> comps;
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (comp[v] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::vector<int> stack{v};
    comp[v] = id;
    while (!stack.empty()) {
      int a = stack.back();
      stack.pop_back();
      comps[id].push_back(a);
      for (int i = 0; i < g.num_bonds(); ++i) {
        if (cleaved[i]) continue;
        const auto& b = g.bonds()[i];
        int other = -1;
        if (b.u == a) other = b.v;
        if (b.v == a) other = b.u;
        if (other >= 0 && comp[other] < 0) {
          comp[other] = id;
          stack.push_back(other);
        }
      }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }
  Decomposition d;
  for (auto& atoms : comps) {
    DecompositionPart part;
    part.atoms = std::move(atoms);
    part.token = -1;
    part.local = true;
    if (vocab && static_cast<int>(part.atoms.size()) <= vocab->cap) {
      const int idx = vocab->index_of(canonical_code(g.induced_subgraph(part.atoms), vocab->cap));
      if (idx >= 0) {
        part.token = idx;
        part.local = false;
      }
    }
    d.parts.push_back(std::move(part));
  }
  for (int i = 0; i < g.num_bonds(); ++i) {
    if (cleaved[i]) d.inter_bonds.push_back(i);
  }
  return d;
}

// --- quotient graph ----------------------------------------------------------------

QuotientGraph quotient_graph(const MolGraph& g, const Decomposition& d) {
  const auto part_of = part_assignment(g, d);
  QuotientGraph q;
  q.tokens.reserve(d.num_parts());
  for (const auto& part : d.parts) q.tokens.push_back(part.token);
  std::map<std::pair<int, int>, int> max_order;
  for (int i : d.inter_bonds) {
    const auto& b = g.bonds()[i];
    int pt = part_of[b.u], pl = part_of[b.v];
    if (pt == pl) continue;
    if (pt > pl) std::swap(pt, pl);
    auto& o = max_order[{pt, pl}];
    o = std::max(o, b.order);
  }
  q.adjacency.assign(d.num_parts(), {});
  for (const auto& [pair, order] : max_order) {
    q.edges.push_back({pair.first, pair.second, order});
    q.adjacency[pair.first].emplace_back(pair.second, order);
    q.adjacency[pair.second].emplace_back(pair.first, order);
  }
  for (auto& adj : q.adjacency) std::sort(adj.begin(), adj.end());
  return q;
}

}  // namespace asba
