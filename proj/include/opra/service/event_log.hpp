#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opra/error.hpp"

namespace opra::service {

/// Append-only newline-delimited JSON log, one record per line. A record is
/// committed once its trailing newline is written; a torn final line left by
/// a crash is dropped (and truncated away) on replay.
class EventLog {
 public:
  explicit EventLog(std::filesystem::path dir, bool sync = true)
      : path_(std::move(dir) / "events.ndjson"), sync_(sync) {
    std::filesystem::create_directories(path_.parent_path());
  }

  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;
  ~EventLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  const std::filesystem::path& path() const { return path_; }

  /// Reads every committed record and opens the log for appending.
  std::vector<nlohmann::json> replay() {
    std::vector<nlohmann::json> records;
    std::uintmax_t committed = 0;
    if (std::filesystem::exists(path_)) {
      std::ifstream in(path_, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      std::size_t pos = 0;
      while (pos < content.size()) {
        const auto end = content.find('\n', pos);
        if (end == std::string::npos) break;
        auto parsed = nlohmann::json::parse(content.begin() + static_cast<std::ptrdiff_t>(pos),
                                            content.begin() + static_cast<std::ptrdiff_t>(end), nullptr, false);
        if (parsed.is_discarded()) break;
        records.push_back(std::move(parsed));
        pos = end + 1;
        committed = pos;
      }
      if (committed < content.size()) std::filesystem::resize_file(path_, committed);
    }
    open_for_append();
    return records;
  }

  void append(const nlohmann::json& record) {
    if (fd_ < 0) open_for_append();
    const std::string line = record.dump() + "\n";
    std::size_t written = 0;
    while (written < line.size()) {
      const auto n = ::write(fd_, line.data() + written, line.size() - written);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::conflict, "log_write_failed", std::string("event log write failed: ") + std::strerror(errno));
      }
      written += static_cast<std::size_t>(n);
    }
    if (sync_) ::fdatasync(fd_);
  }

 private:
  void open_for_append() {
    if (fd_ >= 0) return;
    fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      fail(ErrorCode::conflict, "log_open_failed", "cannot open " + path_.string() + ": " + std::strerror(errno));
    }
  }

  std::filesystem::path path_;
  bool sync_ = true;
  int fd_ = -1;
};

}  // namespace opra::service
