#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "hon/analytics.hpp"

namespace hon {

struct LifetimeCounters {
    std::uint64_t games = 0;
    std::uint64_t correct = 0;

    bool operator==(const LifetimeCounters&) const = default;
};

// Append-only record file in the analytics corpus format. Each record is one
// write() of one complete line on an O_APPEND descriptor; opening the store
// cuts off any trailing partial line left by a crash.
class RecordStore {
public:
    explicit RecordStore(std::filesystem::path path, bool sync_each_line = false);
    ~RecordStore();
    RecordStore(const RecordStore&) = delete;
    RecordStore& operator=(const RecordStore&) = delete;

    // Assigns monotone record ids ("r" + 10 digits) and appends. Throws
    // StorageFull when the device runs out of space.
    std::vector<std::string> append(std::vector<ConversationRecord> records);

    LifetimeCounters counters(const std::string& token) const;
    std::uint64_t next_session_number() const;
    std::uint64_t last_record_number() const;
    // Bytes dropped by the recovery scan when the store was opened.
    std::uintmax_t recovered_bytes() const { return recovered_bytes_; }
    const std::filesystem::path& path() const { return path_; }

    // Counters computed straight from a store file.
    static std::map<std::string, LifetimeCounters> recompute(const std::filesystem::path& path);

private:
    void count(const ConversationRecord& r);

    std::filesystem::path path_;
    bool sync_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::uint64_t next_record_ = 1;
    std::uint64_t next_session_ = 1;
    std::uintmax_t recovered_bytes_ = 0;
    std::map<std::string, LifetimeCounters> counters_;
};

}  // namespace hon
