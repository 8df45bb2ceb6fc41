#pragma once

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sustain5g {

// 32-byte symmetric key plus its derivation context.
struct KeyMaterial {
  std::array<std::uint8_t, 32> bytes{};
  std::string label;
  std::uint32_t generation = 0;
};

namespace detail {

inline std::array<std::uint8_t, 32> hmac_sha256(const std::uint8_t* key,
                                                std::size_t key_len,
                                                const std::uint8_t* data,
                                                std::size_t data_len) {
  std::array<std::uint8_t, 32> out{};
  unsigned int out_len = 0;
  if (HMAC(EVP_sha256(), key, static_cast<int>(key_len), data, data_len,
           out.data(), &out_len) == nullptr ||
      out_len != out.size())
    throw std::runtime_error("HMAC-SHA256 failed");
  return out;
}

inline std::string to_hex(const std::array<std::uint8_t, 32>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (std::uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0x0f]);
  }
  return s;
}

}  // namespace detail

// HKDF-style extract-and-expand keyed by the parent bytes over the label.
// Deterministic; generation increments from the parent.
inline KeyMaterial derive_key(const KeyMaterial& parent,
                              const std::string& label) {
  if (label.empty())
    throw std::invalid_argument("derive_key: label must be non-empty");
  static constexpr char kSalt[] = "sustain5g/kdf/v1";
  const auto prk = detail::hmac_sha256(
      reinterpret_cast<const std::uint8_t*>(kSalt), sizeof(kSalt) - 1,
      parent.bytes.data(), parent.bytes.size());
  std::vector<std::uint8_t> info(label.begin(), label.end());
  info.push_back(0x01);
  KeyMaterial child;
  child.bytes =
      detail::hmac_sha256(prk.data(), prk.size(), info.data(), info.size());
  child.label = label;
  child.generation = parent.generation + 1;
  return child;
}

// Refresh-policy inputs observed for one vehicle.
struct VehicleContext {
  double speed = 0.0;                    // S, m/s
  std::array<double, 2> location{0, 0};  // L, meters
  double last_update = 0.0;              // U_T, seconds since key issuance
  std::uint64_t shared_sessions = 0;     // A_S
  double refresh_rate = 0.0;             // F_R, refreshes per unit time
  std::uint64_t total_keys = 0;          // T_K
  std::uint64_t zone_traversals = 0;     // Z_T since issuance
  double associativity = 1.0;            // V_A in [0,1]
};

enum class SessionMode { LongRange, ShortRange };

// K_AMF -> K_OTK -> {TM-F, HM-F} skeleton with per-peer session keys
// hanging off TM-F (fronthaul) and HM-F (backhaul). Single-writer: issuance
// mutates the tree; reads are safe against a quiescent hierarchy.
class KeyHierarchy {
 public:
  struct Node {
    KeyMaterial key;
    std::map<std::string, Node> children;
  };

  static KeyHierarchy build(const std::array<std::uint8_t, 32>& root_seed) {
    KeyHierarchy h;
    h.root_.key.bytes = root_seed;
    h.root_.key.label = "K_AMF";
    h.root_.key.generation = 0;
    h.remember(h.root_.key.bytes, "K_AMF");
    Node& otk = h.insert_child(h.root_, "K_AMF", "K_OTK");
    h.insert_child(otk, "K_AMF/K_OTK", "TM-F");
    h.insert_child(otk, "K_AMF/K_OTK", "HM-F");
    return h;
  }

  const KeyMaterial* find(const std::string& path) const {
    const Node* node = nullptr;
    std::size_t start = 0;
    while (start <= path.size()) {
      const std::size_t slash = path.find('/', start);
      const std::string part = path.substr(
          start, slash == std::string::npos ? std::string::npos
                                            : slash - start);
      if (node == nullptr) {
        if (part != root_.key.label) return nullptr;
        node = &root_;
      } else {
        const auto it = node->children.find(part);
        if (it == node->children.end()) return nullptr;
        node = &it->second;
      }
      if (slash == std::string::npos) break;
      start = slash + 1;
    }
    return node ? &node->key : nullptr;
  }

  // Issues the next session key for peer_id under TM-F (ShortRange) or
  // HM-F (LongRange); label carries a per-peer issuance counter.
  KeyMaterial issue_session_key(SessionMode mode, const std::string& peer_id) {
    if (peer_id.empty())
      throw std::invalid_argument("issue_session_key: empty peer id");
    const std::string parent_path = mode == SessionMode::ShortRange
                                        ? "K_AMF/K_OTK/TM-F"
                                        : "K_AMF/K_OTK/HM-F";
    Node& parent = mode == SessionMode::ShortRange
                       ? root_.children.at("K_OTK").children.at("TM-F")
                       : root_.children.at("K_OTK").children.at("HM-F");
    const std::uint64_t n = ++issue_counters_[parent_path + "/" + peer_id];
    const std::string label = peer_id + "#" + std::to_string(n);
    Node& child = insert_child(parent, parent_path, label);
    const auto v = vehicles_.find(peer_id);
    if (v != vehicles_.end()) ++v->second.total_keys;
    return child.key;
  }

  void track_vehicle(const std::string& peer_id, const VehicleContext& ctx) {
    vehicles_[peer_id] = ctx;
  }

  VehicleContext* vehicle(const std::string& peer_id) {
    const auto it = vehicles_.find(peer_id);
    return it == vehicles_.end() ? nullptr : &it->second;
  }

  const VehicleContext* vehicle(const std::string& peer_id) const {
    const auto it = vehicles_.find(peer_id);
    return it == vehicles_.end() ? nullptr : &it->second;
  }

  const Node& root() const { return root_; }
  std::size_t key_count() const { return seen_.size(); }

  // Deterministic text export: "label-path hex-key", one per line, sorted
  // by path. Golden-file friendly.
  std::string dump() const {
    std::map<std::string, std::string> lines;
    collect(root_, "K_AMF", lines);
    std::string out;
    for (const auto& [path, hex] : lines) {
      out += path;
      out += ' ';
      out += hex;
      out += '\n';
    }
    return out;
  }

 private:
  Node root_;
  std::map<std::array<std::uint8_t, 32>, std::string> seen_;
  std::map<std::string, std::uint64_t> issue_counters_;
  std::map<std::string, VehicleContext> vehicles_;

  void remember(const std::array<std::uint8_t, 32>& bytes,
                const std::string& path) {
    const auto [it, inserted] = seen_.emplace(bytes, path);
    if (!inserted)
      throw std::runtime_error("key bytes collision between " + it->second +
                               " and " + path);
  }

  Node& insert_child(Node& parent, const std::string& parent_path,
                     const std::string& label) {
    if (parent.children.count(label))
      throw std::invalid_argument("duplicate sibling label: " + label);
    KeyMaterial key = derive_key(parent.key, label);
    remember(key.bytes, parent_path + "/" + label);
    return parent.children.emplace(label, Node{std::move(key), {}})
        .first->second;
  }

  static void collect(const Node& node, const std::string& path,
                      std::map<std::string, std::string>& lines) {
    lines.emplace(path, detail::to_hex(node.key.bytes));
    for (const auto& [label, child] : node.children)
      collect(child, path + "/" + label, lines);
  }
};

inline KeyHierarchy build_hierarchy(
    const std::array<std::uint8_t, 32>& root_seed) {
  return KeyHierarchy::build(root_seed);
}

// ---------------------------------------------------------------------------
// Session lifecycle

enum class SessionPhase { Idle, Authenticating, Active, Refreshing, Expired };
enum class SessionEvent { Start, PassCompleted, Expire, RefreshRequested };

struct SessionState {
  SessionMode mode = SessionMode::ShortRange;
  SessionPhase phase = SessionPhase::Idle;
  std::uint32_t pass_index = 0;  // in [1, Q] while passes are in flight
  std::uint32_t passes_required = 1;  // Q
  std::uint64_t messages_sent = 0;
};

namespace detail {

inline const char* phase_name(SessionPhase p) {
  switch (p) {
    case SessionPhase::Idle: return "Idle";
    case SessionPhase::Authenticating: return "Authenticating";
    case SessionPhase::Active: return "Active";
    case SessionPhase::Refreshing: return "Refreshing";
    case SessionPhase::Expired: return "Expired";
  }
  return "?";
}

inline const char* event_name(SessionEvent e) {
  switch (e) {
    case SessionEvent::Start: return "Start";
    case SessionEvent::PassCompleted: return "PassCompleted";
    case SessionEvent::Expire: return "Expire";
    case SessionEvent::RefreshRequested: return "RefreshRequested";
  }
  return "?";
}

}  // namespace detail

// Value-semantics transition function. Each completed pass sends one
// message; Active is reached only after exactly Q passes from Start or
// RefreshRequested. Illegal (phase, event) pairs throw std::logic_error.
inline SessionState advance_session(SessionState s, SessionEvent e) {
  if (s.passes_required < 1)
    throw std::logic_error("session requires passes_required >= 1");
  if (e == SessionEvent::Expire) {
    s.phase = SessionPhase::Expired;
    s.pass_index = 0;
    return s;
  }
  switch (s.phase) {
    case SessionPhase::Idle:
      if (e == SessionEvent::Start) {
        s.phase = SessionPhase::Authenticating;
        s.pass_index = 1;
        return s;
      }
      break;
    case SessionPhase::Authenticating:
    case SessionPhase::Refreshing:
      if (e == SessionEvent::PassCompleted) {
        ++s.messages_sent;
        if (s.pass_index == s.passes_required) {
          s.phase = SessionPhase::Active;
          s.pass_index = 0;
        } else {
          ++s.pass_index;
        }
        return s;
      }
      break;
    case SessionPhase::Active:
      if (e == SessionEvent::RefreshRequested) {
        s.phase = SessionPhase::Refreshing;
        s.pass_index = 1;
        return s;
      }
      break;
    case SessionPhase::Expired:
      break;
  }
  throw std::logic_error(std::string("illegal session transition: ") +
                         detail::phase_name(s.phase) + " + " +
                         detail::event_name(e));
}

// ---------------------------------------------------------------------------
// Refresh policy

enum class RefreshAction { Keep, Regenerate };

struct RefreshDecision {
  RefreshAction action = RefreshAction::Keep;
  double score = 0.0;
  std::vector<std::string> reasons;
};

// Reference values previously decided against (location, zone count) so the
// policy can see displacement and handovers.
struct PolicyBaseline {
  std::array<double, 2> location{0, 0};
  std::uint64_t zone_traversals = 0;
};

// Scales mapping raw factors onto [0,1]. Defaults are documented choices,
// not measurements; override per deployment.
struct PolicyNormalization {
  double speed_scale = 50.0;           // m/s
  double displacement_scale = 1000.0;  // meters
  double shared_sessions_scale = 16.0;
  double refresh_rate_scale = 10.0;    // per unit time
  double total_keys_scale = 64.0;
  double zone_scale = 8.0;
};

// Two hard rules, then a weighted threshold over eight normalized factors in
// the order (S, L-displacement, U_T, A_S, F_R, T_K, Z_T, 1-V_A). Each factor
// is clamped to [0,1] after scaling, so the score lies in [0, sum(weights)].
inline RefreshDecision evaluate_refresh_policy(
    const VehicleContext& ctx, double fs_window,
    const std::array<double, 8>& weights, double threshold,
    const PolicyBaseline& baseline = {},
    const PolicyNormalization& norm = {}) {
  if (!(fs_window > 0.0))
    throw std::invalid_argument("refresh policy: fs_window must be > 0");
  if (!std::isfinite(threshold))
    throw std::invalid_argument("refresh policy: threshold must be finite");
  for (double w : weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      throw std::invalid_argument(
          "refresh policy: weights must be finite and >= 0");

  const double dx = ctx.location[0] - baseline.location[0];
  const double dy = ctx.location[1] - baseline.location[1];
  const double displacement = std::sqrt(dx * dx + dy * dy);

  auto unit = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const double factors[8] = {
      unit(ctx.speed / norm.speed_scale),
      unit(displacement / norm.displacement_scale),
      unit(ctx.last_update / fs_window),
      unit(static_cast<double>(ctx.shared_sessions) /
           norm.shared_sessions_scale),
      unit(ctx.refresh_rate / norm.refresh_rate_scale),
      unit(static_cast<double>(ctx.total_keys) / norm.total_keys_scale),
      unit(static_cast<double>(ctx.zone_traversals) / norm.zone_scale),
      unit(1.0 - ctx.associativity)};

  RefreshDecision d;
  for (int i = 0; i < 8; ++i) d.score += weights[i] * factors[i];

  if (ctx.last_update > fs_window) {
    d.action = RefreshAction::Regenerate;
    d.reasons.push_back("fail-safe expiry");
  }
  if (ctx.zone_traversals > baseline.zone_traversals) {
    d.action = RefreshAction::Regenerate;
    d.reasons.push_back("zone handover");
  }
  if (d.reasons.empty() && d.score > threshold) {
    d.action = RefreshAction::Regenerate;
    d.reasons.push_back("score threshold");
  }
  return d;
}

}  // namespace sustain5g
