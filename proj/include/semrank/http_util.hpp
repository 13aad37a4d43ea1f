// Copyright 2026 The semrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>

#include "semrank/common.hpp"

namespace semrank::http {

// "http://host:port/some/prefix" -> {"http://host:port", "/some/prefix"}.
struct SplitUrl {
  std::string origin;
  std::string prefix;
};

inline SplitUrl split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("url must start with a scheme: '" + base_url + "'");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path_start);
    out.prefix = base_url.substr(path_start);
  }
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

inline std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

inline void set_timeouts(httplib::Client& cli, double seconds) {
  const auto us = std::chrono::microseconds(static_cast<long long>(seconds * 1e6));
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(us);
  const auto rest = us - sec;
  cli.set_connection_timeout(sec.count(), rest.count());
  cli.set_read_timeout(sec.count(), rest.count());
  cli.set_write_timeout(sec.count(), rest.count());
}

inline bool is_2xx(int status) { return status >= 200 && status < 300; }

}  // namespace semrank::http
