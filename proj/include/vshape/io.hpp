#pragma once

#include <string>
#include <vector>

#include "vshape/data.hpp"
#include "vshape/intensity.hpp"

namespace vshape {

/// Reads a text file, transparently inflating gzip content. Throws IoError.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// `user_id<TAB>unix_timestamp_seconds` per line. Blank lines and lines
/// starting with '#' are skipped;
/// anything else malformed raises ValidationError naming path and line.
EventLog parse_event_log(const std::string& text, const std::string& source = "<memory>");
EventLog read_event_log(const std::string& path);
std::string format_event_log(const EventLog& log);

/// `broadcaster_id<TAB>follower_id` per line.
Network parse_follow_graph(const std::string& text, const std::string& source = "<memory>");
Network read_follow_graph(const std::string& path);
std::string format_follow_graph(const Network& network);

}  // namespace vshape
