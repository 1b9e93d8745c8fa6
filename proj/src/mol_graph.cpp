#include "asba/mol_graph.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace asba {

namespace {

const char* kSymbols[kAtomAlphabetSize] = {"B", "Br", "C", "Cl", "F", "I", "N", "O", "P", "S"};

}  // namespace

int atom_type_from_symbol(const std::string& symbol) {
  auto t = try_atom_type(symbol);
  if (!t) fail(ErrorCode::UnknownAtomSymbol, "atom symbol '" + symbol + "'");
  return *t;
}

std::optional<int> try_atom_type(const std::string& symbol) {
  for (int i = 0; i < kAtomAlphabetSize; ++i) {
    if (symbol == kSymbols[i]) return i;
  }
  return std::nullopt;
}

const char* atom_symbol(int type_code) {
  if (type_code < 0 || type_code >= kAtomAlphabetSize) {
    fail(ErrorCode::IndexOutOfRange, "atom type code " + std::to_string(type_code));
  }
  return kSymbols[type_code];
}

MolGraph MolGraph::build(std::vector<int> atom_types, std::vector<Bond> bonds) {
  const int n = static_cast<int>(atom_types.size());
  for (int i = 0; i < n; ++i) {
    if (atom_types[i] < 0 || atom_types[i] >= kAtomAlphabetSize) {
      fail(ErrorCode::UnknownAtomSymbol, "atom " + std::to_string(i) + " has type code " +
                                             std::to_string(atom_types[i]));
    }
  }
  for (auto& b : bonds) {
    if (b.u < 0 || b.u >= n || b.v < 0 || b.v >= n) {
      fail(ErrorCode::IndexOutOfRange, "bond [" + std::to_string(b.u) + "," + std::to_string(b.v) +
                                           "] on " + std::to_string(n) + " atoms");
    }
    if (b.u == b.v) fail(ErrorCode::SelfLoop, "bond [" + std::to_string(b.u) + "," + std::to_string(b.v) + "]");
    if (b.order < 1 || b.order > 3) {
      fail(ErrorCode::MalformedDocument, "bond order " + std::to_string(b.order) + " not in {1,2,3}");
    }
    if (b.u > b.v) std::swap(b.u, b.v);
  }
  std::sort(bonds.begin(), bonds.end(),
            [](const Bond& a, const Bond& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  for (size_t i = 1; i < bonds.size(); ++i) {
    if (bonds[i].u == bonds[i - 1].u && bonds[i].v == bonds[i - 1].v) {
      fail(ErrorCode::DuplicateBond,
           "bond [" + std::to_string(bonds[i].u) + "," + std::to_string(bonds[i].v) + "]");
    }
  }
  MolGraph g;
  g.atom_types_ = std::move(atom_types);
  g.bonds_ = std::move(bonds);
  g.adjacency_.assign(n, {});
  for (const auto& b : g.bonds_) {
    g.adjacency_[b.u].emplace_back(b.v, b.order);
    g.adjacency_[b.v].emplace_back(b.u, b.order);
  }
  for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());
  return g;
}

int MolGraph::bond_order_between(int u, int v) const {
  const auto& adj = adjacency_[u];
  auto it = std::lower_bound(adj.begin(), adj.end(), std::make_pair(v, 0));
  if (it != adj.end() && it->first == v) return it->second;
  return 0;
}

MolGraph MolGraph::induced_subgraph(const std::vector<int>& atoms) const {
  std::vector<int> sorted = atoms;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> pos(num_atoms(), -1);
  std::vector<int> types;
  types.reserve(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    pos[sorted[i]] = static_cast<int>(i);
    types.push_back(atom_types_[sorted[i]]);
  }
  std::vector<Bond> sub_bonds;
  for (const auto& b : bonds_) {
    if (pos[b.u] >= 0 && pos[b.v] >= 0) sub_bonds.push_back({pos[b.u], pos[b.v], b.order});
  }
  return build(std::move(types), std::move(sub_bonds));
}

// --- native parsing ----------------------------------------------------------

ParsedMolecule parse_native(const nlohmann::json& doc) {
  if (!doc.is_object()) fail(ErrorCode::MalformedDocument, "molecule line is not an object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "atoms" && key != "bonds" && key != "labels" && key != "target") {
      fail(ErrorCode::MalformedDocument, "unknown key '" + key + "'");
    }
  }
  if (!doc.contains("atoms") || !doc["atoms"].is_array()) {
    fail(ErrorCode::MalformedDocument, "missing or non-array 'atoms'");
  }
  if (!doc.contains("bonds") || !doc["bonds"].is_array()) {
    fail(ErrorCode::MalformedDocument, "missing or non-array 'bonds'");
  }
  std::vector<int> types;
  for (const auto& a : doc["atoms"]) {
    if (!a.is_string()) fail(ErrorCode::MalformedDocument, "atom entry is not a string");
    types.push_back(atom_type_from_symbol(a.get<std::string>()));
  }
  std::vector<Bond> bonds;
  for (const auto& b : doc["bonds"]) {
    if (!b.is_array() || b.size() != 3 || !b[0].is_number_integer() || !b[1].is_number_integer() ||
        !b[2].is_number_integer()) {
      fail(ErrorCode::MalformedDocument, "bond entry must be [u, v, order]");
    }
    bonds.push_back({b[0].get<int>(), b[1].get<int>(), b[2].get<int>()});
  }
  ParsedMolecule out;
  out.graph = MolGraph::build(std::move(types), std::move(bonds));
  if (doc.contains("labels")) {
    if (!doc["labels"].is_array()) fail(ErrorCode::MalformedDocument, "'labels' is not an array");
    for (const auto& l : doc["labels"]) {
      if (l.is_null()) {
        out.labels.push_back(-1);
      } else if (l.is_number_integer() && (l.get<int>() == 0 || l.get<int>() == 1)) {
        out.labels.push_back(l.get<int>());
      } else {
        fail(ErrorCode::MalformedDocument, "label entry must be 0, 1, or null");
      }
    }
  }
  if (doc.contains("target")) {
    if (!doc["target"].is_number()) fail(ErrorCode::MalformedDocument, "'target' is not a number");
    out.target = doc["target"].get<double>();
  }
  return out;
}

ParsedMolecule parse_native(const std::string& line) {
  nlohmann::json doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded()) fail(ErrorCode::MalformedDocument, "invalid structured text: " + line.substr(0, 60));
  return parse_native(doc);
}

nlohmann::json serialize_native(const MolGraph& g, const std::vector<int>* labels, const double* target) {
  nlohmann::json doc;
  auto& atoms = doc["atoms"] = nlohmann::json::array();
  for (int v = 0; v < g.num_atoms(); ++v) atoms.push_back(atom_symbol(g.atom_type(v)));
  auto& bonds = doc["bonds"] = nlohmann::json::array();
  for (const auto& b : g.bonds()) bonds.push_back({b.u, b.v, b.order});
  if (labels) {
    auto& ls = doc["labels"] = nlohmann::json::array();
    for (int l : *labels) {
      if (l < 0) {
        ls.push_back(nullptr);
      } else {
        ls.push_back(l);
      }
    }
  }
  if (target) doc["target"] = *target;
  return doc;
}

// --- SMILES subset -----------------------------------------------------------

MolGraph parse_smiles_subset(const std::string& s) {
  std::vector<int> types;
  std::vector<Bond> bonds;
  std::vector<int> branch_stack;
  // ring slot: (open atom, bond order given at open; 0 = unspecified)
  std::map<int, std::pair<int, int>> ring_open;
  int prev_atom = -1;
  int pending_order = 0;

  auto add_atom = [&](int type, size_t pos) {
    int idx = static_cast<int>(types.size());
    types.push_back(type);
    if (prev_atom >= 0) {
      bonds.push_back({prev_atom, idx, pending_order == 0 ? 1 : pending_order});
    } else if (pending_order != 0) {
      fail(ErrorCode::MalformedDocument, "bond symbol before any atom at position " + std::to_string(pos));
    }
    pending_order = 0;
    prev_atom = idx;
  };

  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    const char c = s[i];
    if (c == 'C' || c == 'B') {
      // two-letter Cl / Br take precedence
      if (i + 1 < n && ((c == 'C' && s[i + 1] == 'l') || (c == 'B' && s[i + 1] == 'r'))) {
        add_atom(atom_type_from_symbol(std::string(1, c) + s[i + 1]), i);
        i += 2;
      } else {
        add_atom(atom_type_from_symbol(std::string(1, c)), i);
        ++i;
      }
    } else if (c == 'N' || c == 'O' || c == 'P' || c == 'S' || c == 'F' || c == 'I') {
      add_atom(atom_type_from_symbol(std::string(1, c)), i);
      ++i;
    } else if (c == '-' || c == '=' || c == '#') {
      if (pending_order != 0) {
        fail(ErrorCode::MalformedDocument, "doubled bond symbol at position " + std::to_string(i));
      }
      pending_order = (c == '-') ? 1 : (c == '=') ? 2 : 3;
      ++i;
    } else if (c == '(') {
      if (prev_atom < 0) fail(ErrorCode::UnbalancedParenthesis, "'(' with no preceding atom");
      if (pending_order != 0) fail(ErrorCode::MalformedDocument, "bond symbol before '('");
      branch_stack.push_back(prev_atom);
      ++i;
    } else if (c == ')') {
      if (branch_stack.empty()) fail(ErrorCode::UnbalancedParenthesis, "')' at position " + std::to_string(i));
      if (pending_order != 0) fail(ErrorCode::MalformedDocument, "dangling bond before ')'");
      prev_atom = branch_stack.back();
      branch_stack.pop_back();
      ++i;
    } else if (c >= '1' && c <= '9') {
      if (prev_atom < 0) fail(ErrorCode::MalformedDocument, "ring digit before any atom");
      const int digit = c - '0';
      auto it = ring_open.find(digit);
      if (it == ring_open.end()) {
        ring_open[digit] = {prev_atom, pending_order};
      } else {
        auto [open_atom, open_order] = it->second;
        int order = 1;
        if (open_order != 0 && pending_order != 0 && open_order != pending_order) {
          fail(ErrorCode::UnmatchedRingBond, "ring bond " + std::to_string(digit) + " order mismatch");
        }
        if (open_order != 0) order = open_order;
        if (pending_order != 0) order = pending_order;
        if (open_atom == prev_atom) {
          fail(ErrorCode::SelfLoop, "ring bond " + std::to_string(digit) + " closes on its own atom");
        }
        bonds.push_back({open_atom, prev_atom, order});
        ring_open.erase(it);
      }
      pending_order = 0;
      ++i;
    } else {
      fail(ErrorCode::UnsupportedToken,
           "'" + std::string(1, c) + "' at position " + std::to_string(i));
    }
  }
  if (pending_order != 0) fail(ErrorCode::MalformedDocument, "dangling bond symbol at end of input");
  if (!branch_stack.empty()) fail(ErrorCode::UnbalancedParenthesis, "unclosed '('");
  if (!ring_open.empty()) {
    fail(ErrorCode::UnmatchedRingBond, "ring bond " + std::to_string(ring_open.begin()->first) + " never closed");
  }
  if (types.empty()) fail(ErrorCode::MalformedDocument, "empty molecule");
  return MolGraph::build(std::move(types), std::move(bonds));
}

// --- canonicalization ---------------------------------------------------------

namespace {

using Partition = std::vector<std::vector<int>>;

Partition initial_partition(const MolGraph& g) {
  std::map<std::pair<int, int>, std::vector<int>> groups;
  for (int v = 0; v < g.num_atoms(); ++v) {
    groups[{g.atom_type(v), g.degree(v)}].push_back(v);
  }
  Partition p;
  p.reserve(groups.size());
  for (auto& [_, cell] : groups) p.push_back(std::move(cell));
  return p;
}

// Equitable refinement: split cells by sorted multisets of (neighbor cell,
// bond order) until stable. Cell order stays isomorphism-invariant because
// subcells are ordered by their signature values.
void refine(const MolGraph& g, Partition& p) {
  const int n = g.num_atoms();
  std::vector<int> cell_of(n);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t ci = 0; ci < p.size(); ++ci) {
      for (int v : p[ci]) cell_of[v] = static_cast<int>(ci);
    }
    Partition next;
    next.reserve(p.size());
    for (auto& cell : p) {
      if (cell.size() == 1) {
        next.push_back(cell);
        continue;
      }
      std::vector<std::pair<std::vector<std::pair<int, int>>, int>> keyed;
      keyed.reserve(cell.size());
      for (int v : cell) {
        std::vector<std::pair<int, int>> sig;
        sig.reserve(g.neighbors(v).size());
        for (auto [u, order] : g.neighbors(v)) sig.emplace_back(cell_of[u], order);
        std::sort(sig.begin(), sig.end());
        keyed.emplace_back(std::move(sig), v);
      }
      std::sort(keyed.begin(), keyed.end());
      size_t i = 0;
      while (i < keyed.size()) {
        size_t j = i;
        std::vector<int> sub;
        while (j < keyed.size() && keyed[j].first == keyed[i].first) sub.push_back(keyed[j++].second);
        std::sort(sub.begin(), sub.end());
        if (sub.size() != cell.size()) changed = true;
        next.push_back(std::move(sub));
        i = j;
      }
    }
    p = std::move(next);
  }
}

void encode_order(const MolGraph& g, const std::vector<int>& order, std::string* out) {
  const int n = g.num_atoms();
  std::vector<int> pos(n);
  for (int p = 0; p < n; ++p) pos[order[p]] = p;
  out->clear();
  out->push_back(static_cast<char>(n));
  for (int p = 0; p < n; ++p) out->push_back(static_cast<char>(g.atom_type(order[p])));
  std::vector<std::array<int, 3>> eb;
  eb.reserve(g.bonds().size());
  for (const auto& b : g.bonds()) {
    int pu = pos[b.u], pv = pos[b.v];
    if (pu > pv) std::swap(pu, pv);
    eb.push_back({pu, pv, b.order});
  }
  std::sort(eb.begin(), eb.end());
  out->push_back(static_cast<char>(eb.size()));
  for (const auto& e : eb) {
    out->push_back(static_cast<char>(e[0]));
    out->push_back(static_cast<char>(e[1]));
    out->push_back(static_cast<char>(e[2]));
  }
}

struct CanonSearch {
  explicit CanonSearch(const MolGraph& g) : graph(g) {}

  const MolGraph& graph;
  std::string best;
  std::vector<int> best_order;
  bool have_best = false;
  std::string scratch;

  void run(Partition p) {
    refine(graph, p);
    int target = -1;
    for (size_t i = 0; i < p.size(); ++i) {
      if (p[i].size() > 1) {
        target = static_cast<int>(i);
        break;
      }
    }
    if (target < 0) {
      std::vector<int> order;
      order.reserve(p.size());
      for (const auto& cell : p) order.push_back(cell[0]);
      encode_order(graph, order, &scratch);
      if (!have_best || scratch < best) {
        best = scratch;
        best_order = order;
        have_best = true;
      }
      return;
    }
    for (int v : p[target]) {
      Partition q;
      q.reserve(p.size() + 1);
      for (int i = 0; i < static_cast<int>(p.size()); ++i) {
        if (i != target) {
          q.push_back(p[i]);
          continue;
        }
        q.push_back({v});
        std::vector<int> rest;
        for (int w : p[i]) {
          if (w != v) rest.push_back(w);
        }
        q.push_back(std::move(rest));
      }
      run(std::move(q));
    }
  }
};

}  // namespace

CanonicalForm canonical_form(const MolGraph& g, int cap) {
  if (g.num_atoms() > cap) {
    fail(ErrorCode::PatternTooLarge,
         std::to_string(g.num_atoms()) + " atoms exceeds cap " + std::to_string(cap));
  }
  CanonicalForm out;
  if (g.num_atoms() == 0) {
    out.code.push_back('\0');
    return out;
  }
  CanonSearch search(g);
  search.run(initial_partition(g));
  out.code = search.best;
  out.order = search.best_order;
  const int n = g.num_atoms();
  std::vector<int> pos(n);
  for (int p = 0; p < n; ++p) pos[out.order[p]] = p;
  std::vector<int> types(n);
  for (int p = 0; p < n; ++p) types[p] = g.atom_type(out.order[p]);
  std::vector<Bond> bonds;
  bonds.reserve(g.bonds().size());
  for (const auto& b : g.bonds()) bonds.push_back({pos[b.u], pos[b.v], b.order});
  out.graph = MolGraph::build(std::move(types), std::move(bonds));
  return out;
}

std::string canonical_code(const MolGraph& g, int cap) { return canonical_form(g, cap).code; }

std::vector<int> canonical_order(const MolGraph& g) {
  const int n = g.num_atoms();
  if (n > 255) fail(ErrorCode::PatternTooLarge, std::to_string(n) + " atoms exceeds 255");
  std::vector<int> perm(n);
  if (n == 0) return perm;
  CanonSearch search(g);
  search.run(initial_partition(g));
  for (int pos = 0; pos < n; ++pos) perm[search.best_order[pos]] = pos;
  return perm;
}

std::string code_to_hex(const std::string& code) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(code.size() * 2);
  for (unsigned char c : code) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xF]);
  }
  return out;
}

std::string code_from_hex(const std::string& hex) {
  if (hex.size() % 2 != 0) fail(ErrorCode::MalformedDocument, "odd-length hex code");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    fail(ErrorCode::MalformedDocument, std::string("bad hex digit '") + c + "'");
  };
  std::string out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    out.push_back(static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1])));
  }
  return out;
}

// --- structure queries --------------------------------------------------------

std::vector<bool> bridge_mask(const MolGraph& g) {
  const int n = g.num_atoms();
  std::vector<bool> bridge(g.num_bonds(), false);
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  // bond index lookup aligned with g.bonds() order
  std::map<std::pair<int, int>, int> bond_index;
  for (int i = 0; i < g.num_bonds(); ++i) {
    bond_index[{g.bonds()[i].u, g.bonds()[i].v}] = i;
  }
  auto edge_id = [&](int u, int v) {
    if (u > v) std::swap(u, v);
    return bond_index.at({u, v});
  };

  // iterative DFS; parent tracked by the edge used to enter
  struct Frame {
    int v;
    int parent_edge;
    size_t next = 0;
  };
  for (int root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack{{root, -1}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < g.neighbors(f.v).size()) {
        auto [u, _] = g.neighbors(f.v)[f.next++];
        const int eid = edge_id(f.v, u);
        if (eid == f.parent_edge) continue;
        if (disc[u] < 0) {
          disc[u] = low[u] = timer++;
          stack.push_back({u, eid});
        } else {
          low[f.v] = std::min(low[f.v], disc[u]);
        }
      } else {
        const int v = f.v;
        const int pe = f.parent_edge;
        stack.pop_back();
        if (!stack.empty()) {
          const int p = stack.back().v;
          low[p] = std::min(low[p], low[v]);
          if (low[v] > disc[p]) bridge[pe] = true;
        }
      }
    }
  }
  return bridge;
}

std::vector<bool> ring_atom_mask(const MolGraph& g) {
  std::vector<bool> mask(g.num_atoms(), false);
  const auto bridges = bridge_mask(g);
  for (int i = 0; i < g.num_bonds(); ++i) {
    if (!bridges[i]) {
      mask[g.bonds()[i].u] = true;
      mask[g.bonds()[i].v] = true;
    }
  }
  return mask;
}

std::vector<int> ring_atoms(const MolGraph& g) {
  std::vector<int> out;
  const auto mask = ring_atom_mask(g);
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (mask[v]) out.push_back(v);
  }
  return out;
}

namespace {

std::string lossy_scaffold_key(const MolGraph& g) {
  // fallback for structures beyond the canonicalization cap
  std::string key;
  key.push_back(static_cast<char>(0xFF));
  std::array<int, kAtomAlphabetSize> counts{};
  for (int t : g.atom_types()) counts[t]++;
  for (int c : counts) {
    key.push_back(static_cast<char>(c & 0xFF));
    key.push_back(static_cast<char>((c >> 8) & 0xFF));
  }
  const int nb = g.num_bonds();
  key.push_back(static_cast<char>(nb & 0xFF));
  key.push_back(static_cast<char>((nb >> 8) & 0xFF));
  return key;
}

}  // namespace

std::string scaffold_key(const MolGraph& g, int cap) {
  const auto ring = ring_atom_mask(g);
  std::vector<bool> keep(g.num_atoms(), true);
  std::vector<int> deg(g.num_atoms());
  for (int v = 0; v < g.num_atoms(); ++v) deg[v] = g.degree(v);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < g.num_atoms(); ++v) {
      if (keep[v] && !ring[v] && deg[v] <= 1) {
        keep[v] = false;
        changed = true;
        for (auto [u, _] : g.neighbors(v)) {
          if (keep[u]) deg[u]--;
        }
      }
    }
  }
  std::vector<int> kept;
  for (int v = 0; v < g.num_atoms(); ++v) {
    if (keep[v]) kept.push_back(v);
  }
  const MolGraph scaffold = kept.empty() ? g : g.induced_subgraph(kept);
  if (scaffold.num_atoms() > cap) return lossy_scaffold_key(scaffold);
  return canonical_code(scaffold, cap);
}

MolGraph relabel(const MolGraph& g, const std::vector<int>& perm) {
  const int n = g.num_atoms();
  if (static_cast<int>(perm.size()) != n) {
    fail(ErrorCode::NotAPermutation, "permutation size " + std::to_string(perm.size()) +
                                         " != atom count " + std::to_string(n));
  }
  std::vector<bool> seen(n, false);
  for (int p : perm) {
    if (p < 0 || p >= n || seen[p]) fail(ErrorCode::NotAPermutation, "index " + std::to_string(p));
    seen[p] = true;
  }
  std::vector<int> types(n);
  for (int v = 0; v < n; ++v) types[perm[v]] = g.atom_type(v);
  std::vector<Bond> bonds;
  bonds.reserve(g.bonds().size());
  for (const auto& b : g.bonds()) bonds.push_back({perm[b.u], perm[b.v], b.order});
  return MolGraph::build(std::move(types), std::move(bonds));
}

// --- file helpers ---------------------------------------------------------------

namespace {

std::vector<std::string> read_data_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::FileError, "cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    size_t end = line.find_last_not_of(" \t\r");
    std::string trimmed = line.substr(start, end - start + 1);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    lines.push_back(std::move(trimmed));
  }
  return lines;
}

}  // namespace

std::vector<ParsedMolecule> load_native_file(const std::string& path) {
  std::vector<ParsedMolecule> out;
  for (const auto& line : read_data_lines(path)) out.push_back(parse_native(line));
  return out;
}

std::vector<MolGraph> load_smiles_file(const std::string& path) {
  std::vector<MolGraph> out;
  for (const auto& line : read_data_lines(path)) out.push_back(parse_smiles_subset(line));
  return out;
}

std::vector<ParsedMolecule> load_molecule_file(const std::string& path) {
  const auto lines = read_data_lines(path);
  std::vector<ParsedMolecule> out;
  out.reserve(lines.size());
  const bool native = !lines.empty() && lines[0][0] == '{';
  for (const auto& line : lines) {
    if (native) {
      out.push_back(parse_native(line));
    } else {
      out.push_back({parse_smiles_subset(line), {}, std::nullopt});
    }
  }
  return out;
}

}  // namespace asba
