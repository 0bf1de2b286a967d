#include "prism/version.hpp"

namespace prism {

std::string_view version() { return PRISM_VERSION; }

}  // namespace prism
