#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace stresscal {

// Warnings go through a process-wide sink (stderr by default). The sink is
// guarded by a mutex so warnings may be raised from worker threads.
using WarningSink = std::function<void(const std::string&)>;

void warn(const std::string& message);

// Installs a sink and returns the previous one. An empty sink restores stderr.
WarningSink set_warning_sink(WarningSink sink);

// RAII capture of warnings, mostly for tests.
class ScopedWarningCapture {
 public:
  ScopedWarningCapture();
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& needle) const;

 private:
  std::vector<std::string> messages_;
  WarningSink previous_;
};

// Passes each distinct message on once while alive; repeats are dropped.
class ScopedWarningDedup {
 public:
  ScopedWarningDedup();
  ~ScopedWarningDedup();
  ScopedWarningDedup(const ScopedWarningDedup&) = delete;
  ScopedWarningDedup& operator=(const ScopedWarningDedup&) = delete;

 private:
  std::set<std::string> seen_;
  WarningSink previous_;
};

}  // namespace stresscal
