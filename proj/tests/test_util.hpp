#pragma once

#include <doctest.h>

#include <functional>

#include "stylemimic/error.hpp"

namespace stylemimic::testing {

/// Runs fn and returns the code of the Error it throws.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace stylemimic::testing
