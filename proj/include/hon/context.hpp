#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hon {

struct Location {
    std::string city;
    std::string region;
    int utc_offset_minutes = 0;

    // File-name friendly key: lowercase city, spaces become underscores.
    std::string key() const;
    bool operator==(const Location&) const = default;
};

struct Weather {
    int temp_f = 0;
    int temp_c = 0;
    std::string wind_dir;
    int wind_mph = 0;
    int wind_kmh = 0;
    int humidity_pct = 0;

    bool operator==(const Weather&) const = default;
};

// "79F (26C), Wind E at 12 mph (19 km/h), 64% Humidity"
std::string format_weather(const Weather& w);
std::optional<Weather> parse_weather(const std::string& text);

struct Story {
    std::string headline;
    std::string age;  // provider-supplied, e.g. "29 mins ago"

    bool operator==(const Story&) const = default;
};

struct Tweet {
    std::string text;
    std::string author;
    std::string age;

    bool operator==(const Tweet&) const = default;
};

inline constexpr std::size_t kMaxStories = 10;
inline constexpr std::size_t kMaxTweets = 5;

struct ContextSnapshot {
    std::string city;
    std::string local_date;  // "Tuesday, May 30, 2023"; empty when unknown
    std::string local_time;  // "09:28 AM"; empty when unknown
    std::optional<Weather> weather;
    std::vector<Story> stories;
    std::vector<Tweet> tweets;
    double fetched_at = 0.0;  // unix seconds

    bool operator==(const ContextSnapshot&) const = default;

    // Enforces list caps and single-line strings.
    void normalize();
};

std::string format_local_date(double unix_seconds, int utc_offset_minutes);
std::string format_local_time(double unix_seconds, int utc_offset_minutes);

enum class BlockKind { Date, Time, Weather, Stories, Tweets, Framing, Persona, Start };

struct PromptBlock {
    BlockKind kind;
    std::vector<std::string> lines;

    bool operator==(const PromptBlock&) const = default;
};

// Labeled blocks for every populated section, in prompt order. Empty
// sections produce no block at all.
std::vector<PromptBlock> format_context_block(const ContextSnapshot& snapshot);
// Inverse of format_context_block (fetched_at is not recoverable and stays 0).
ContextSnapshot parse_context_blocks(const std::vector<PromptBlock>& blocks);

class WeatherProvider {
public:
    virtual ~WeatherProvider() = default;
    virtual Weather fetch_weather(const Location& where) = 0;
};

class NewsProvider {
public:
    virtual ~NewsProvider() = default;
    virtual std::vector<Story> fetch_stories(const Location& where) = 0;
};

class TweetsProvider {
public:
    virtual ~TweetsProvider() = default;
    virtual std::vector<Tweet> fetch_tweets(const Location& where) = 0;
};

// A provider signals failure by throwing; the section is then left out.
struct ProviderSet {
    std::shared_ptr<WeatherProvider> weather;
    std::shared_ptr<NewsProvider> news;
    std::shared_ptr<TweetsProvider> tweets;
    double timeout_s = 3.0;
    double ttl_s = 300.0;
};

// Reads <dir>/<location key>.json. See data/fixtures/honolulu.json.
class FixtureProvider : public WeatherProvider, public NewsProvider, public TweetsProvider {
public:
    explicit FixtureProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}

    Weather fetch_weather(const Location& where) override;
    std::vector<Story> fetch_stories(const Location& where) override;
    std::vector<Tweet> fetch_tweets(const Location& where) override;

private:
    std::filesystem::path dir_;
};

// Where a field lives in an endpoint's JSON response, as JSON pointers.
struct HttpFeedConfig {
    std::string base_url;  // "http://host:port"
    std::string weather_path = "/weather?city={city}";
    std::string news_path = "/news?city={city}";
    std::string tweets_path = "/tweets?city={city}";
    std::map<std::string, std::string> weather_fields = {
        {"temp_f", "/temp_f"}, {"temp_c", "/temp_c"},     {"wind_dir", "/wind_dir"},
        {"wind_mph", "/wind_mph"}, {"wind_kmh", "/wind_kmh"}, {"humidity_pct", "/humidity_pct"}};
    std::string stories_list = "/stories";
    std::string story_headline = "/headline";
    std::string story_age = "/age";
    std::string tweets_list = "/tweets";
    std::string tweet_text = "/text";
    std::string tweet_author = "/author";
    std::string tweet_age = "/age";
};

class HttpProvider : public WeatherProvider, public NewsProvider, public TweetsProvider {
public:
    HttpProvider(HttpFeedConfig config, double timeout_s);

    Weather fetch_weather(const Location& where) override;
    std::vector<Story> fetch_stories(const Location& where) override;
    std::vector<Tweet> fetch_tweets(const Location& where) override;

private:
    std::string get(const std::string& path_template, const Location& where);

    HttpFeedConfig config_;
    double timeout_s_;
};

ProviderSet fixture_providers(const std::filesystem::path& dir, double ttl_s = 300.0);
ProviderSet http_providers(const HttpFeedConfig& config, double timeout_s, double ttl_s = 300.0);

// Per-location snapshot cache. Each key has its own lock so a slow fetch for
// one city never holds up another.
class SnapshotCache {
public:
    struct Entry {
        std::mutex mutex;
        std::optional<ContextSnapshot> snapshot;
    };

    std::shared_ptr<Entry> entry(const std::string& key);
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> entries_;
};

// Returns the cached snapshot verbatim within ttl; otherwise queries every
// provider independently. Date and time come from `now_unix` at fetch time,
// never from a provider.
ContextSnapshot fetch_snapshot(const Location& where, const ProviderSet& providers, SnapshotCache& cache,
                               double now_unix);

// Reads a complete snapshot (including date and time) straight from a fixture file.
ContextSnapshot load_fixture_snapshot(const std::filesystem::path& file);
Location load_fixture_location(const std::filesystem::path& file);

}  // namespace hon
