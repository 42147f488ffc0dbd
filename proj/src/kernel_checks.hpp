#pragma once

#include <cstddef>
#include <string>

#include "zdids/error.hpp"

namespace zdids::kernels::detail {

inline void require_size(std::size_t have, std::size_t want, const char* what) {
  if (have < want) {
    throw ShapeMismatch(std::string(what) + ": buffer holds " + std::to_string(have) +
                        " values, need " + std::to_string(want));
  }
}

}  // namespace zdids::kernels::detail
