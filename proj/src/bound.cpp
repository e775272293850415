// SPDX-License-Identifier: Apache-2.0
#include "mesp/bound.hpp"

#include <algorithm>

namespace mesp {

bool BoundResult::has_flag(const std::string& f) const {
  return std::find(flags.begin(), flags.end(), f) != flags.end();
}

}  // namespace mesp
