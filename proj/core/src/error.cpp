#include "limeeval/error.hpp"

#include <cerrno>
#include <cstring>

namespace limeeval {

void throw_io_error(const std::string& what, const std::string& path) {
  std::string msg = what + ": " + path;
  if (errno != 0) {
    msg += " (";
    msg += std::strerror(errno);
    msg += ")";
  }
  throw IoError(msg);
}

}  // namespace limeeval
