#pragma once

#include <string_view>

namespace prism {

std::string_view version();

}  // namespace prism
