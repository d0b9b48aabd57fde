#pragma once

#include <cassert>
#include <string_view>
#include <utility>
#include <variant>

namespace bcounter {

/// Error codes shared by every module. Each module only produces the subset
/// that applies to it.
enum class Errc {
  InvalidBound,
  InvalidReplica,
  NotEnoughRights,
  NonPositiveDelta,
  SelfTransfer,
  IncompatibleCounters,
  MalformedEncoding,
  Overflow,
  // kv_store
  NotFound,
  WrongMode,
  Conflict,
  // middleware
  AlreadyExists,
  RetriesExhausted,
  StaleOwner,
  // model checker
  BudgetTooLarge,
  InvalidStep,
  // harness
  ConfigInvalid,
};

constexpr std::string_view to_string(Errc e) noexcept {
  switch (e) {
    case Errc::InvalidBound: return "InvalidBound";
    case Errc::InvalidReplica: return "InvalidReplica";
    case Errc::NotEnoughRights: return "NotEnoughRights";
    case Errc::NonPositiveDelta: return "NonPositiveDelta";
    case Errc::SelfTransfer: return "SelfTransfer";
    case Errc::IncompatibleCounters: return "IncompatibleCounters";
    case Errc::MalformedEncoding: return "MalformedEncoding";
    case Errc::Overflow: return "Overflow";
    case Errc::NotFound: return "NotFound";
    case Errc::WrongMode: return "WrongMode";
    case Errc::Conflict: return "Conflict";
    case Errc::AlreadyExists: return "AlreadyExists";
    case Errc::RetriesExhausted: return "RetriesExhausted";
    case Errc::StaleOwner: return "StaleOwner";
    case Errc::BudgetTooLarge: return "BudgetTooLarge";
    case Errc::InvalidStep: return "InvalidStep";
    case Errc::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

/// Minimal value-or-error holder (std::expected is not available in C++20).
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}  // NOLINT(google-explicit-constructor)
  Result(Errc err) : v_(err) {}              // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return std::holds_alternative<T>(v_); }
  explicit operator bool() const noexcept { return ok(); }

  Errc error() const noexcept {
    assert(!ok());
    return std::get<Errc>(v_);
  }

  T& value() & { return std::get<T>(v_); }
  const T& value() const& { return std::get<T>(v_); }
  T&& value() && { return std::get<T>(std::move(v_)); }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  std::variant<T, Errc> v_;
};

/// Outcome of an operation that produces no value.
class [[nodiscard]] Status {
 public:
  Status() = default;
  Status(Errc err) : err_(err), ok_(false) {}  // NOLINT(google-explicit-constructor)

  static Status success() { return {}; }

  bool ok() const noexcept { return ok_; }
  explicit operator bool() const noexcept { return ok_; }
  Errc error() const noexcept {
    assert(!ok_);
    return err_;
  }

 private:
  Errc err_{};
  bool ok_ = true;
};

}  // namespace bcounter
