#pragma once

#include <string_view>

// Data files under data/ compiled into the library so the tools run without a
// config directory.
namespace hon::defaults {

extern const std::string_view strategy_tags_json;
extern const std::string_view moderation_json;
extern const std::string_view personas_json;
extern const std::string_view starters_txt;
extern const std::string_view emoji_ranges_txt;
extern const std::string_view styles_json;
extern const std::string_view config_json;

}  // namespace hon::defaults
