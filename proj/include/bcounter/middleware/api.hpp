#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "bcounter/crdt/bounded_counter.hpp"
#include "bcounter/result.hpp"

namespace bcounter {

enum class OpKind : std::uint8_t { Inc, Dec };

/// LOCAL operations never wait on another data center; GLOBAL ones may fetch
/// rights synchronously before giving up.
enum class OpFlag : std::uint8_t { Local, Global };

enum class OpStatus : std::uint8_t { Ok, Fail, Retry };

struct OpResult {
  OpStatus status = OpStatus::Fail;
  /// Set with RETRY: some remote replica visibly holds enough rights, so a
  /// GLOBAL attempt is likely to succeed.
  bool hint = false;
  std::optional<Errc> reason;
  /// The operation had to fetch rights from another data center.
  bool used_sync_transfer = false;

  static OpResult ok() { return {OpStatus::Ok, false, std::nullopt, false}; }
  static OpResult fail(Errc why) { return {OpStatus::Fail, false, why, false}; }
  static OpResult retry(Errc why, bool hint) { return {OpStatus::Retry, hint, why, false}; }
};

std::string_view to_string(OpKind k) noexcept;
std::string_view to_string(OpFlag f) noexcept;
std::string_view to_string(OpStatus s) noexcept;

using OpCallback = std::function<void(OpResult)>;

/// One client request as issued by a simulated client session.
struct ClientOp {
  int dc = 0;
  int client = 0;
  std::string key;
  OpKind kind = OpKind::Dec;
  Count delta = 1;
  OpFlag flag = OpFlag::Global;
};

}  // namespace bcounter
