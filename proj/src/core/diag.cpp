#include "stresscal/diag.hpp"

#include <iostream>
#include <mutex>

#include "stresscal/error.hpp"

namespace stresscal {

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& current_sink() {
  static WarningSink sink;
  return sink;
}

}  // namespace

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage: return "usage error";
    case ErrorKind::config: return "config error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "i/o error";
    case ErrorKind::empty_input: return "empty-input error";
    case ErrorKind::insufficient_data: return "insufficient-data error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::incompatible_format: return "incompatible-format error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::contamination: return "contamination error";
    case ErrorKind::policy: return "policy error";
  }
  return "error";
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (current_sink()) {
    current_sink()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  WarningSink previous = std::move(current_sink());
  current_sink() = std::move(sink);
  return previous;
}

ScopedWarningCapture::ScopedWarningCapture() {
  previous_ = set_warning_sink([this](const std::string& m) { messages_.push_back(m); });
}

ScopedWarningCapture::~ScopedWarningCapture() { set_warning_sink(std::move(previous_)); }

ScopedWarningDedup::ScopedWarningDedup() {
  // The sink runs under the warning mutex, so it forwards directly.
  previous_ = set_warning_sink([this](const std::string& m) {
    if (!seen_.insert(m).second) return;
    if (previous_) {
      previous_(m);
    } else {
      std::cerr << "warning: " << m << '\n';
    }
  });
}

ScopedWarningDedup::~ScopedWarningDedup() { set_warning_sink(std::move(previous_)); }

bool ScopedWarningCapture::contains(const std::string& needle) const {
  for (const auto& m : messages_) {
    if (m.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace stresscal
