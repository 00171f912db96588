#pragma once

namespace phonomaser {

inline const char* version_string() { return "0.1.0"; }

}  // namespace phonomaser
