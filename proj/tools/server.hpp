#pragma once

#include "lfd/episode.hpp"
#include "lfd/session.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

namespace lfd::cli {

struct ServeOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  SessionOptions session;
  std::filesystem::path results_dir = "results";
  /// Stop after this many connections have closed; 0 serves until interrupted.
  std::size_t max_connections = 0;
  std::function<void(unsigned short)> on_listen;
};

/// WebSocket bridge: one Session per connection, stepped at the tick rate,
/// one JSON message per text frame. Completed episodes are saved as logs in
/// results_dir. Blocks until interrupted or max_connections is reached.
void serve(const EpisodeModels& models, const EpisodeConfig& cfg, const ServeOptions& opts, std::ostream& log);

}  // namespace lfd::cli
