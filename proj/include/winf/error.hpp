#pragma once

#include <stdexcept>
#include <string>

namespace winf {

// Every library error carries a short machine-readable kind, used by the CLI
// as the error prefix ("winf-error: <kind>: <message>").
class error : public std::runtime_error {
 public:
  error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Argument outside an operation's domain (x outside [0,1], n = 0, t <= 0, ...).
struct domain_error : error {
  explicit domain_error(const std::string& m) : error("domain", m) {}
};

// Density description that cannot form a model (overlapping pieces, gaps, ...).
struct structural_error : error {
  explicit structural_error(const std::string& m) : error("structure", m) {}
};

// Model rejected by validation and not force-accepted.
struct assumption_error : error {
  explicit assumption_error(const std::string& m) : error("assumption", m) {}
};

struct config_error : error {
  explicit config_error(const std::string& m) : error("config", m) {}
};

// Construction stage produced a mismatched or degenerate plan.
struct certification_error : error {
  explicit certification_error(const std::string& m) : error("certification", m) {}
};

struct io_error : error {
  explicit io_error(const std::string& m) : error("io", m) {}
};

}  // namespace winf
