#pragma once

#include <optional>

#include "canonflow/error.hpp"

template <class F>
std::optional<canonflow::ErrorKind> error_kind(F&& fn) {
  try {
    fn();
  } catch (const canonflow::Error& e) {
    return e.kind();
  }
  return std::nullopt;
}
