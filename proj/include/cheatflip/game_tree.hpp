#pragma once

// Finite binary game trees built on a black-box coin.
//
// Every internal node is one coin flip: "up" is coin outcome 0, "down" is
// coin outcome 1. Leaves carry the outcome of the whole game. The player we
// track wants game outcome 0, so the honest win probability of a leaf is 1
// when its label is 0 and 0 when its label is 1.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cheatflip/error.hpp"
#include "cheatflip/rng.hpp"

namespace cheatflip {

/// Deepest tree for which every 2^-D and every honest win probability is an
/// exact binary64 value.
inline constexpr int kMaxExactDepth = 52;

/// Node storage. Internal nodes have both children set; leaves have neither.
struct TreeNode {
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::size_t up = kNone;
  std::size_t down = kNone;
  int label = 0;  // leaves only

  [[nodiscard]] bool is_leaf() const noexcept { return up == kNone; }
};

/// Immutable binary game tree. Nodes are stored in preorder (node, up
/// subtree, down subtree) so node 0 is the root and indices are stable.
class GameTree {
 public:
  static GameTree leaf(int label) {
    if (label != 0 && label != 1) {
      throw DomainError("leaf label must be 0 or 1, got " + std::to_string(label));
    }
    GameTree t;
    t.nodes_.push_back(TreeNode{TreeNode::kNone, TreeNode::kNone, label});
    return t;
  }

  static GameTree flip(const GameTree& up, const GameTree& down) {
    GameTree t;
    t.nodes_.reserve(1 + up.size() + down.size());
    t.nodes_.push_back(TreeNode{1, 1 + up.size(), 0});
    t.append_shifted(up, 1);
    t.append_shifted(down, 1 + up.size());
    return t;
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
  [[nodiscard]] std::span<const TreeNode> nodes() const noexcept { return nodes_; }

  [[nodiscard]] std::size_t internal_count() const noexcept {
    std::size_t n = 0;
    for (const auto& nd : nodes_) n += nd.is_leaf() ? 0 : 1;
    return n;
  }

  /// Length of the longest root-to-leaf path.
  [[nodiscard]] int max_depth() const {
    std::vector<int> depth(nodes_.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& nd = nodes_[i];
      best = std::max(best, depth[i]);
      if (!nd.is_leaf()) {
        depth[nd.up] = depth[i] + 1;
        depth[nd.down] = depth[i] + 1;
      }
    }
    return best;
  }

  /// Same tree with every leaf label complemented.
  [[nodiscard]] GameTree mirrored() const {
    GameTree t = *this;
    for (auto& nd : t.nodes_) {
      if (nd.is_leaf()) nd.label = 1 - nd.label;
    }
    return t;
  }

  friend bool operator==(const GameTree& a, const GameTree& b) {
    if (a.nodes_.size() != b.nodes_.size()) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
      const auto& x = a.nodes_[i];
      const auto& y = b.nodes_[i];
      if (x.up != y.up || x.down != y.down) return false;
      if (x.is_leaf() && x.label != y.label) return false;
    }
    return true;
  }

 private:
  GameTree() = default;

  void append_shifted(const GameTree& sub, std::size_t offset) {
    for (auto nd : sub.nodes_) {
      if (!nd.is_leaf()) {
        nd.up += offset;
        nd.down += offset;
      }
      nodes_.push_back(nd);
    }
  }

  std::vector<TreeNode> nodes_;
};

/// Honest win probability contributed by a leaf label.
constexpr double leaf_win(int label) noexcept { return label == 0 ? 1.0 : 0.0; }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline GameTree parse_node(const nlohmann::json& j, const std::string& path) {
  const std::string where = "at node '" + path + "'";
  if (!j.is_object()) throw ParseError("expected an object " + where);
  const bool has_leaf = j.contains("leaf");
  const bool has_flip = j.contains("flip");
  if (has_leaf == has_flip || j.size() != 1) {
    throw ParseError("node must have exactly one of \"leaf\" or \"flip\" " + where);
  }
  if (has_leaf) {
    const auto& v = j["leaf"];
    if (!v.is_number_integer() || (v.get<std::int64_t>() != 0 && v.get<std::int64_t>() != 1)) {
      throw ParseError("leaf label must be 0 or 1 " + where);
    }
    return GameTree::leaf(v.get<int>());
  }
  const auto& f = j["flip"];
  if (!f.is_object()) throw ParseError("\"flip\" must be an object " + where);
  if (!f.contains("up")) throw ParseError("missing \"up\" child " + where);
  if (!f.contains("down")) throw ParseError("missing \"down\" child " + where);
  if (f.size() != 2) throw ParseError("unexpected key in \"flip\" " + where);
  return GameTree::flip(parse_node(f["up"], path + "U"), parse_node(f["down"], path + "D"));
}

inline nlohmann::json node_to_json(const GameTree& t, std::size_t i) {
  const auto& nd = t.node(i);
  if (nd.is_leaf()) return {{"leaf", nd.label}};
  return {{"flip", {{"up", node_to_json(t, nd.up)}, {"down", node_to_json(t, nd.down)}}}};
}

}  // namespace detail

inline GameTree tree_from_json(const nlohmann::json& j) { return detail::parse_node(j, ""); }

/// Parses a tree document. Errors name the offending root-to-node path.
inline GameTree parse_tree(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return tree_from_json(j);
}

inline nlohmann::json tree_to_json(const GameTree& t) { return detail::node_to_json(t, 0); }

/// Compact canonical document, e.g. {"flip":{"up":{"leaf":0},"down":{"leaf":1}}}.
inline std::string serialize_tree(const GameTree& t) {
  // nlohmann sorts object keys; "up" must come before "down", so write by hand.
  std::string out;
  auto emit = [&](auto&& self, std::size_t i) -> void {
    const auto& nd = t.node(i);
    if (nd.is_leaf()) {
      out += "{\"leaf\":";
      out += static_cast<char>('0' + nd.label);
      out += '}';
      return;
    }
    out += "{\"flip\":{\"up\":";
    self(self, nd.up);
    out += ",\"down\":";
    self(self, nd.down);
    out += "}}";
  };
  emit(emit, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Majority-of-n game that stops as soon as one outcome has (n+1)/2 wins.
inline GameTree gen_best_of(int n) {
  if (n < 1 || n % 2 == 0) {
    throw DomainError("best-of requires a positive odd n, got " + std::to_string(n));
  }
  const int need = (n + 1) / 2;
  auto build = [need](auto&& self, int zeros, int ones) -> GameTree {
    if (zeros == need) return GameTree::leaf(0);
    if (ones == need) return GameTree::leaf(1);
    return GameTree::flip(self(self, zeros + 1, ones), self(self, zeros, ones + 1));
  };
  return build(build, 0, 0);
}

/// Complete tree of the given depth, leaves labeled left to right (up first).
inline GameTree gen_full(int depth, std::span<const int> labels) {
  if (depth < 1) throw DomainError("full tree depth must be positive");
  if (depth > 30) throw DomainError("full tree depth too large");
  const std::size_t expected = std::size_t{1} << depth;
  if (labels.size() != expected) {
    throw DomainError("full tree of depth " + std::to_string(depth) + " needs " +
                      std::to_string(expected) + " labels, got " +
                      std::to_string(labels.size()));
  }
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi) -> GameTree {
    if (hi - lo == 1) return GameTree::leaf(labels[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    return GameTree::flip(self(self, lo, mid), self(self, mid, hi));
  };
  return build(build, 0, expected);
}

/// Random tree of depth at most `max_depth` (0 gives a single leaf). Each
/// position below the cap becomes a flip with probability 1/2.
inline GameTree gen_random(int max_depth, std::uint64_t seed) {
  if (max_depth < 0) throw DomainError("max_depth must be nonnegative");
  SplitMix64 rng(seed);
  auto build = [&](auto&& self, int remaining) -> GameTree {
    if (remaining > 0 && rng.bit()) {
      GameTree up = self(self, remaining - 1);
      GameTree down = self(self, remaining - 1);
      return GameTree::flip(up, down);
    }
    return GameTree::leaf(rng.bit() ? 1 : 0);
  };
  return build(build, max_depth);
}

/// Fair random tree: Flip(T, mirror(T)) with T = gen_random(max_depth - 1).
inline GameTree gen_random_fair(int max_depth, std::uint64_t seed) {
  if (max_depth < 1) throw DomainError("max_depth must be at least 1");
  GameTree t = gen_random(max_depth - 1, seed);
  return GameTree::flip(t, t.mirrored());
}

// ---------------------------------------------------------------------------
// Annotation
// ---------------------------------------------------------------------------

struct NodeInfo {
  std::string path;  // U/D steps from the root; "" is the root
  int depth = 0;
  double reach = 1.0;  // 2^-depth
  double p_w = 0.0;
  double delta = 0.0;  // internal nodes only
  bool internal = false;
};

/// Per-node annotations, indexed like the tree's nodes.
class TreeAnnotation {
 public:
  TreeAnnotation() = default;
  explicit TreeAnnotation(std::vector<NodeInfo> nodes) : nodes_(std::move(nodes)) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) by_path_.emplace(nodes_[i].path, i);
  }

  [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }
  [[nodiscard]] const NodeInfo& operator[](std::size_t i) const { return nodes_.at(i); }
  [[nodiscard]] NodeInfo& operator[](std::size_t i) { return nodes_.at(i); }
  [[nodiscard]] const NodeInfo& root() const { return nodes_.at(0); }
  [[nodiscard]] std::span<const NodeInfo> nodes() const noexcept { return nodes_; }

  [[nodiscard]] const NodeInfo& at(const std::string& path) const {
    auto it = by_path_.find(path);
    if (it == by_path_.end()) throw DomainError("no node at path '" + path + "'");
    return nodes_[it->second];
  }
  [[nodiscard]] std::size_t index_of(const std::string& path) const {
    auto it = by_path_.find(path);
    if (it == by_path_.end()) throw DomainError("no node at path '" + path + "'");
    return it->second;
  }
  [[nodiscard]] bool contains(const std::string& path) const { return by_path_.contains(path); }

 private:
  std::vector<NodeInfo> nodes_;
  std::map<std::string, std::size_t> by_path_;
};

/// Depth, reach probability, honest P_W and Delta for every node.
inline TreeAnnotation annotate(const GameTree& t) {
  const auto nodes = t.nodes();
  std::vector<NodeInfo> info(nodes.size());
  // Preorder: parents precede children, so one forward pass sets paths and
  // depths and one backward pass fills P_W bottom-up.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nd = nodes[i];
    if (info[i].depth > kMaxExactDepth) {
      throw DomainError("tree depth exceeds " + std::to_string(kMaxExactDepth));
    }
    info[i].reach = std::ldexp(1.0, -info[i].depth);
    info[i].internal = !nd.is_leaf();
    if (!nd.is_leaf()) {
      info[nd.up].path = info[i].path + 'U';
      info[nd.down].path = info[i].path + 'D';
      info[nd.up].depth = info[nd.down].depth = info[i].depth + 1;
    }
  }
  for (std::size_t k = nodes.size(); k-- > 0;) {
    const auto& nd = nodes[k];
    if (nd.is_leaf()) {
      info[k].p_w = leaf_win(nd.label);
    } else {
      info[k].p_w = 0.5 * (info[nd.up].p_w + info[nd.down].p_w);
      info[k].delta = info[nd.up].p_w - info[nd.down].p_w;
    }
  }
  return TreeAnnotation(std::move(info));
}

/// Sum over internal nodes of 2^-D(x) Delta(x)^2. Equals 4p(1-p) for root
/// value p, hence 1 on fair trees.
inline double lemma_sum(const TreeAnnotation& ann) {
  double s = 0.0;
  for (const auto& n : ann.nodes()) {
    if (n.internal) s += n.reach * n.delta * n.delta;
  }
  return s;
}

inline bool is_fair(const TreeAnnotation& ann) { return ann.root().p_w == 0.5; }

}  // namespace cheatflip
