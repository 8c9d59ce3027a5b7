#include "efcil/rational.hpp"

#include <stdexcept>

namespace efcil {

Fraction parse_fraction(const std::string& text) {
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) return {std::stoll(text), 1};
    return {std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1))};
  } catch (const std::logic_error&) {
    fail(ErrorCode::Parse, "invalid fraction '" + text + "'");
  }
}

}  // namespace efcil
