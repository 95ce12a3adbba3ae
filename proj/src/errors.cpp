#include "quadinv/errors.hpp"

#include <cstdio>

namespace quadinv {

namespace {
std::string with_location(const std::string& what, double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " (t = %.17g)", t);
    return what + buf;
}
} // namespace

LocatedError::LocatedError(const std::string& what, double t)
    : Error(with_location(what, t)), t_(t) {}

} // namespace quadinv
