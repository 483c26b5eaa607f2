#include "hon/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

#include "hon/error.hpp"

namespace hon {

namespace fs = std::filesystem;

namespace {

// Parses the numeric tail of ids such as "r0000000042" or "s00000007".
std::uint64_t id_number(const std::string& id, char prefix) {
    if (id.size() < 2 || id[0] != prefix) return 0;
    std::uint64_t v = 0;
    for (std::size_t i = 1; i < id.size(); ++i) {
        if (id[i] < '0' || id[i] > '9') return 0;
        v = v * 10 + static_cast<std::uint64_t>(id[i] - '0');
    }
    return v;
}

std::string numbered(char prefix, std::uint64_t n) {
    std::string digits = std::to_string(n);
    if (digits.size() < 10) digits.insert(0, 10 - digits.size(), '0');
    return std::string(1, prefix) + digits;
}

// Truncates the file after its last newline; returns the bytes removed.
std::uintmax_t drop_partial_tail(const fs::path& path) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec || size == 0) return 0;
    std::ifstream in(path, std::ios::binary);
    std::uintmax_t keep = size;
    const std::uintmax_t chunk = 4096;
    std::string buf;
    while (keep > 0) {
        const std::uintmax_t start = keep > chunk ? keep - chunk : 0;
        buf.resize(static_cast<std::size_t>(keep - start));
        in.seekg(static_cast<std::streamoff>(start));
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto nl = buf.rfind('\n');
        if (nl != std::string::npos) {
            keep = start + nl + 1;
            break;
        }
        keep = start;
    }
    if (keep == size) return 0;
    fs::resize_file(path, keep);
    return size - keep;
}

}  // namespace

RecordStore::RecordStore(fs::path path, bool sync_each_line) : path_(std::move(path)), sync_(sync_each_line) {
    if (path_.has_parent_path() && !fs::exists(path_.parent_path())) fs::create_directories(path_.parent_path());
    // Devices and pipes are written to but never scanned.
    const bool regular = fs::is_regular_file(path_);
    if (regular) recovered_bytes_ = drop_partial_tail(path_);

    std::ifstream in;
    if (regular) in.open(path_, std::ios::binary);
    std::string line;
    while (in.is_open() && std::getline(in, line)) {
        if (trim(line).empty()) continue;
        try {
            const auto r = record_from_json_line(line);
            next_record_ = std::max(next_record_, id_number(r.record_id, 'r') + 1);
            next_session_ = std::max(next_session_, id_number(r.session_id, 's') + 1);
            count(r);
        } catch (const std::exception&) {
            // Not ours to repair; analytics skips it too in lenient mode.
        }
    }

    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw InvalidConfig("cannot open record store " + path_.string() + ": " + std::strerror(errno));
}

RecordStore::~RecordStore() {
    if (fd_ >= 0) ::close(fd_);
}

void RecordStore::count(const ConversationRecord& r) {
    if (r.guesser_token.empty()) return;
    auto& c = counters_[r.guesser_token];
    ++c.games;
    if (r.correct.value_or(false)) ++c.correct;
}

std::vector<std::string> RecordStore::append(std::vector<ConversationRecord> records) {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (auto& r : records) {
        r.record_id = numbered('r', next_record_);
        const std::string line = to_json_line(r) + "\n";
        const ssize_t n = ::write(fd_, line.data(), line.size());
        if (n != static_cast<ssize_t>(line.size())) {
            const int err = n < 0 ? errno : ENOSPC;
            // A short write leaves a partial line; cut it so the file stays line-clean.
            if (n > 0) {
                const auto size = fs::file_size(path_);
                fs::resize_file(path_, size - static_cast<std::uintmax_t>(n));
            }
            if (err == ENOSPC || err == EDQUOT || err == EFBIG)
                throw StorageFull("record store " + path_.string() + " is full");
            throw std::runtime_error("write to record store failed: " + std::string(std::strerror(err)));
        }
        if (sync_) ::fsync(fd_);
        ++next_record_;
        next_session_ = std::max(next_session_, id_number(r.session_id, 's') + 1);
        count(r);
        ids.push_back(r.record_id);
    }
    return ids;
}

LifetimeCounters RecordStore::counters(const std::string& token) const {
    std::lock_guard lock(mutex_);
    if (auto it = counters_.find(token); it != counters_.end()) return it->second;
    return {};
}

std::uint64_t RecordStore::next_session_number() const {
    std::lock_guard lock(mutex_);
    return next_session_;
}

std::uint64_t RecordStore::last_record_number() const {
    std::lock_guard lock(mutex_);
    return next_record_ - 1;
}

std::map<std::string, LifetimeCounters> RecordStore::recompute(const fs::path& path) {
    std::map<std::string, LifetimeCounters> out;
    const auto corpus = ingest(path, false);
    for (const auto& r : corpus.records) {
        if (r.guesser_token.empty()) continue;
        auto& c = out[r.guesser_token];
        ++c.games;
        if (r.correct.value_or(false)) ++c.correct;
    }
    return out;
}

}  // namespace hon
