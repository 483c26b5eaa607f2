#include "hon/context.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <regex>

#include <spdlog/spdlog.h>

#include "hon/text.hpp"
#include "json.hpp"

namespace hon {

using nlohmann::json;

std::string Location::key() const {
    std::string k = to_lower_ascii(trim(city));
    for (char& c : k)
        if (c == ' ') c = '_';
    return k;
}

std::string format_weather(const Weather& w) {
    return std::to_string(w.temp_f) + "F (" + std::to_string(w.temp_c) + "C), Wind " + w.wind_dir + " at " +
           std::to_string(w.wind_mph) + " mph (" + std::to_string(w.wind_kmh) + " km/h), " +
           std::to_string(w.humidity_pct) + "% Humidity";
}

std::optional<Weather> parse_weather(const std::string& text) {
    static const std::regex re(
        R"(^(-?\d+)F \((-?\d+)C\), Wind (\S+) at (\d+) mph \((\d+) km/h\), (\d+)% Humidity$)");
    std::smatch m;
    if (!std::regex_match(text, m, re)) return std::nullopt;
    Weather w;
    w.temp_f = std::stoi(m[1]);
    w.temp_c = std::stoi(m[2]);
    w.wind_dir = m[3];
    w.wind_mph = std::stoi(m[4]);
    w.wind_kmh = std::stoi(m[5]);
    w.humidity_pct = std::stoi(m[6]);
    return w;
}

void ContextSnapshot::normalize() {
    city = single_line(city);
    local_date = single_line(local_date);
    local_time = single_line(local_time);
    if (stories.size() > kMaxStories) stories.resize(kMaxStories);
    if (tweets.size() > kMaxTweets) tweets.resize(kMaxTweets);
    for (auto& s : stories) {
        s.headline = single_line(s.headline);
        s.age = single_line(s.age);
    }
    for (auto& t : tweets) {
        t.text = single_line(t.text);
        t.author = single_line(t.author);
        t.age = single_line(t.age);
    }
    if (weather) weather->wind_dir = single_line(weather->wind_dir);
}

namespace {

struct CivilTime {
    int year;
    unsigned month;  // 1..12
    unsigned day;
    unsigned weekday;  // 0 = Sunday
    int hour;
    int minute;
};

// Days-from-epoch to civil date (proleptic Gregorian).
CivilTime to_civil(double unix_seconds, int utc_offset_minutes) {
    const auto local = static_cast<long long>(std::floor(unix_seconds)) + utc_offset_minutes * 60LL;
    long long days = local >= 0 ? local / 86400 : (local - 86399) / 86400;
    const long long secs = local - days * 86400;
    CivilTime ct{};
    ct.hour = static_cast<int>(secs / 3600);
    ct.minute = static_cast<int>((secs % 3600) / 60);
    ct.weekday = static_cast<unsigned>(((days % 7 + 7) % 7 + 4) % 7);  // 1970-01-01 was a Thursday
    days += 719468;
    const long long era = (days >= 0 ? days : days - 146096) / 146097;
    const auto doe = static_cast<unsigned>(days - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    ct.day = doy - (153 * mp + 2) / 5 + 1;
    ct.month = mp < 10 ? mp + 3 : mp - 9;
    ct.year = static_cast<int>(yoe + era * 400 + (ct.month <= 2 ? 1 : 0));
    return ct;
}

constexpr const char* kWeekdays[] = {"Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"};
constexpr const char* kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                   "July",    "August",   "September", "October", "November", "December"};

const std::string kStoriesLabel = "Top stories in ";
const std::string kTweetsLabel = "Top tweets in ";

// Lists end their last item with a period.
std::vector<std::string> numbered(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out.push_back(std::to_string(i + 1) + ". " + items[i] + (i + 1 == items.size() ? "." : ""));
    return out;
}

std::string strip_label(const std::string& line, const std::string& prefix) {
    // "<prefix><city>: value"
    auto colon = line.find(": ", prefix.size());
    return colon == std::string::npos ? std::string() : line.substr(colon + 2);
}

std::string label_city(const std::string& line, const std::string& prefix) {
    auto colon = line.find(':', prefix.size());
    return line.substr(prefix.size(), colon - prefix.size());
}

std::string strip_item_number(const std::string& line) {
    auto dot = line.find(". ");
    return dot == std::string::npos ? line : line.substr(dot + 2);
}

std::string drop_final_period(std::string s) {
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace

std::string format_local_date(double unix_seconds, int utc_offset_minutes) {
    const auto ct = to_civil(unix_seconds, utc_offset_minutes);
    return std::string(kWeekdays[ct.weekday]) + ", " + kMonths[ct.month - 1] + " " + std::to_string(ct.day) +
           ", " + std::to_string(ct.year);
}

std::string format_local_time(double unix_seconds, int utc_offset_minutes) {
    const auto ct = to_civil(unix_seconds, utc_offset_minutes);
    int h12 = ct.hour % 12;
    if (h12 == 0) h12 = 12;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d %s", h12, ct.minute, ct.hour < 12 ? "AM" : "PM");
    return buf;
}

std::vector<PromptBlock> format_context_block(const ContextSnapshot& s) {
    std::vector<PromptBlock> blocks;
    if (!s.local_date.empty())
        blocks.push_back({BlockKind::Date, {"Date in " + s.city + ": " + s.local_date + "."}});
    if (!s.local_time.empty())
        blocks.push_back({BlockKind::Time, {"Time in " + s.city + ": " + s.local_time + "."}});
    if (s.weather)
        blocks.push_back({BlockKind::Weather, {"Weather in " + s.city + ": " + format_weather(*s.weather) + "."}});
    if (!s.stories.empty()) {
        std::vector<std::string> items;
        for (const auto& st : s.stories) items.push_back(st.headline + " (" + st.age + ")");
        PromptBlock b{BlockKind::Stories, {kStoriesLabel + s.city + ":"}};
        for (auto& l : numbered(items)) b.lines.push_back(std::move(l));
        blocks.push_back(std::move(b));
    }
    if (!s.tweets.empty()) {
        std::vector<std::string> items;
        for (const auto& t : s.tweets) items.push_back(t.text + "(" + t.author + ", " + t.age + ")");
        PromptBlock b{BlockKind::Tweets, {kTweetsLabel + s.city + ":"}};
        for (auto& l : numbered(items)) b.lines.push_back(std::move(l));
        blocks.push_back(std::move(b));
    }
    return blocks;
}

ContextSnapshot parse_context_blocks(const std::vector<PromptBlock>& blocks) {
    ContextSnapshot s;
    for (const auto& b : blocks) {
        if (b.lines.empty()) continue;
        const std::string& head = b.lines.front();
        switch (b.kind) {
        case BlockKind::Date:
            s.city = label_city(head, "Date in ");
            s.local_date = drop_final_period(strip_label(head, "Date in "));
            break;
        case BlockKind::Time:
            s.city = label_city(head, "Time in ");
            s.local_time = drop_final_period(strip_label(head, "Time in "));
            break;
        case BlockKind::Weather:
            s.city = label_city(head, "Weather in ");
            s.weather = parse_weather(drop_final_period(strip_label(head, "Weather in ")));
            break;
        case BlockKind::Stories:
            s.city = label_city(head, kStoriesLabel);
            for (std::size_t i = 1; i < b.lines.size(); ++i) {
                std::string item = strip_item_number(b.lines[i]);
                if (i + 1 == b.lines.size()) item = drop_final_period(item);
                auto open = item.rfind(" (");
                if (open == std::string::npos || item.back() != ')') continue;
                s.stories.push_back({item.substr(0, open), item.substr(open + 2, item.size() - open - 3)});
            }
            break;
        case BlockKind::Tweets:
            s.city = label_city(head, kTweetsLabel);
            for (std::size_t i = 1; i < b.lines.size(); ++i) {
                std::string item = strip_item_number(b.lines[i]);
                if (i + 1 == b.lines.size()) item = drop_final_period(item);
                auto open = item.rfind('(');
                if (open == std::string::npos || item.back() != ')') continue;
                std::string meta = item.substr(open + 1, item.size() - open - 2);
                auto comma = meta.rfind(", ");
                if (comma == std::string::npos) continue;
                s.tweets.push_back({item.substr(0, open), meta.substr(0, comma), meta.substr(comma + 2)});
            }
            break;
        default:
            break;
        }
    }
    return s;
}

namespace {

json read_json_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    return json::parse(in);
}

Weather weather_from_json(const json& j) {
    Weather w;
    w.temp_f = j.at("temp_f").get<int>();
    w.temp_c = j.at("temp_c").get<int>();
    w.wind_dir = j.at("wind_dir").get<std::string>();
    w.wind_mph = j.at("wind_mph").get<int>();
    w.wind_kmh = j.at("wind_kmh").get<int>();
    w.humidity_pct = j.at("humidity_pct").get<int>();
    return w;
}

std::vector<Story> stories_from_json(const json& j) {
    std::vector<Story> out;
    for (const auto& s : j) out.push_back({s.at("headline").get<std::string>(), s.at("age").get<std::string>()});
    return out;
}

std::vector<Tweet> tweets_from_json(const json& j) {
    std::vector<Tweet> out;
    for (const auto& t : j)
        out.push_back({t.at("text").get<std::string>(), t.at("author").get<std::string>(),
                       t.at("age").get<std::string>()});
    return out;
}

}  // namespace

Weather FixtureProvider::fetch_weather(const Location& where) {
    return weather_from_json(read_json_file(dir_ / (where.key() + ".json")).at("weather"));
}

std::vector<Story> FixtureProvider::fetch_stories(const Location& where) {
    return stories_from_json(read_json_file(dir_ / (where.key() + ".json")).at("stories"));
}

std::vector<Tweet> FixtureProvider::fetch_tweets(const Location& where) {
    return tweets_from_json(read_json_file(dir_ / (where.key() + ".json")).at("tweets"));
}

ProviderSet fixture_providers(const std::filesystem::path& dir, double ttl_s) {
    auto p = std::make_shared<FixtureProvider>(dir);
    ProviderSet set;
    set.weather = p;
    set.news = p;
    set.tweets = p;
    set.ttl_s = ttl_s;
    return set;
}

ProviderSet http_providers(const HttpFeedConfig& config, double timeout_s, double ttl_s) {
    auto p = std::make_shared<HttpProvider>(config, timeout_s);
    ProviderSet set;
    set.weather = p;
    set.news = p;
    set.tweets = p;
    set.timeout_s = timeout_s;
    set.ttl_s = ttl_s;
    return set;
}

std::shared_ptr<SnapshotCache::Entry> SnapshotCache::entry(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto& e = entries_[key];
    if (!e) e = std::make_shared<Entry>();
    return e;
}

std::size_t SnapshotCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

ContextSnapshot fetch_snapshot(const Location& where, const ProviderSet& providers, SnapshotCache& cache,
                               double now_unix) {
    auto entry = cache.entry(where.key());
    std::lock_guard lock(entry->mutex);
    if (entry->snapshot && now_unix - entry->snapshot->fetched_at < providers.ttl_s) return *entry->snapshot;

    // Launch everything first so the providers run side by side.
    auto launch = [&](auto&& call) -> std::optional<std::future<decltype(call())>> {
        try {
            return std::async(std::launch::async, call);
        } catch (const std::system_error&) {
            return std::async(std::launch::deferred, call);
        }
    };
    std::optional<std::future<Weather>> weather;
    std::optional<std::future<std::vector<Story>>> stories;
    std::optional<std::future<std::vector<Tweet>>> tweets;
    if (providers.weather) weather = launch([&] { return providers.weather->fetch_weather(where); });
    if (providers.news) stories = launch([&] { return providers.news->fetch_stories(where); });
    if (providers.tweets) tweets = launch([&] { return providers.tweets->fetch_tweets(where); });

    ContextSnapshot s;
    s.city = where.city;
    s.local_date = format_local_date(now_unix, where.utc_offset_minutes);
    s.local_time = format_local_time(now_unix, where.utc_offset_minutes);
    s.fetched_at = now_unix;
    auto collect = [&](auto& fut, auto& into, const char* what) {
        if (!fut) return;
        try {
            into = fut->get();
        } catch (const std::exception& e) {
            spdlog::warn("context provider '{}' failed for {}: {}", what, where.city, e.what());
        }
    };
    collect(weather, s.weather, "weather");
    collect(stories, s.stories, "news");
    collect(tweets, s.tweets, "tweets");
    s.normalize();
    entry->snapshot = s;
    return s;
}

Location load_fixture_location(const std::filesystem::path& file) {
    const json j = read_json_file(file);
    const auto& l = j.at("location");
    return {l.at("city").get<std::string>(), l.value("region", std::string()), l.value("utc_offset_minutes", 0)};
}

ContextSnapshot load_fixture_snapshot(const std::filesystem::path& file) {
    const json j = read_json_file(file);
    ContextSnapshot s;
    s.city = j.at("location").at("city").get<std::string>();
    s.local_date = j.value("date", std::string());
    s.local_time = j.value("time", std::string());
    if (j.contains("weather")) s.weather = weather_from_json(j.at("weather"));
    if (j.contains("stories")) s.stories = stories_from_json(j.at("stories"));
    if (j.contains("tweets")) s.tweets = tweets_from_json(j.at("tweets"));
    s.normalize();
    return s;
}

}  // namespace hon
