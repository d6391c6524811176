#ifndef QKD_ERRORS_HPP
#define QKD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qkd {

// Base class for all library failures.
class error : public std::runtime_error {
public:
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or parameter domain (CLI exit code 2).
class config_error : public error {
public:
  explicit config_error(const std::string& msg) : error(msg) {}
};

// Numerical failure: quadrature non-convergence, degenerate estimation
// denominators, violated estimation validity conditions, consistency
// failures between closed forms and quadrature (CLI exit code 3).
class numeric_error : public error {
public:
  explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Filesystem/output failure (CLI exit code 4).
class io_error : public error {
public:
  explicit io_error(const std::string& msg) : error(msg) {}
};

} // namespace qkd

#endif
