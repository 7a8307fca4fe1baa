// SPDX-License-Identifier: Apache-2.0
#include "test_support.hpp"

#include <unistd.h>

namespace multilog::testing {

long TempDir::getpid_compat() { return static_cast<long>(::getpid()); }

}  // namespace multilog::testing
