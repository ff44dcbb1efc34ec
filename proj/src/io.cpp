#include "vshape/io.hpp"

#include <zlib.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>

#include "vshape/errors.hpp"

namespace vshape {

std::string read_text_file(const std::string& path) {
  // gzopen reads uncompressed files verbatim, which gives transparent
  // decompression for free.
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file(gzopen(path.c_str(), "rb"), &gzclose);
  if (!file) throw IoError("cannot open " + path);
  std::string out;
  char buffer[1 << 16];
  for (;;) {
    const int n = gzread(file.get(), buffer, sizeof buffer);
    if (n < 0) {
      int code = 0;
      throw IoError("read error in " + path + ": " + gzerror(file.get(), &code));
    }
    if (n == 0) break;
    out.append(buffer, static_cast<std::size_t>(n));
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write error on " + path);
}

namespace {

// Calls fn(line_number, fields) for each nonblank, non-comment line split on
// one tab.
template <class Fn>
void for_each_record(const std::string& text, const std::string& source, Fn&& fn) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || line.find('\t', tab + 1) != std::string_view::npos) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": expected exactly two tab-separated fields");
    }
    fn(line_no, line.substr(0, tab), line.substr(tab + 1));
  }
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

EventLog parse_event_log(const std::string& text, const std::string& source) {
  EventLog log;
  for_each_record(text, source, [&](std::size_t line_no, std::string_view user,
                                    std::string_view stamp) {
    double t = 0.0;
    auto res = std::from_chars(stamp.data(), stamp.data() + stamp.size(), t);
    if (user.empty()) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": empty user id");
    }
    if (res.ec != std::errc() || res.ptr != stamp.data() + stamp.size() || !std::isfinite(t)) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": malformed timestamp '" +
                            std::string(stamp) + "'");
    }
    log.add(std::string(user), t);
  });
  log.finalize();
  return log;
}

EventLog read_event_log(const std::string& path) { return parse_event_log(read_text_file(path), path); }

std::string format_event_log(const EventLog& log) {
  std::string out;
  for (const auto& [user, times] : log.users()) {
    for (double t : times) {
      out += user;
      out += '\t';
      out += format_double(t);
      out += '\n';
    }
  }
  return out;
}

Network parse_follow_graph(const std::string& text, const std::string& source) {
  Network network;
  for_each_record(text, source, [&](std::size_t line_no, std::string_view u, std::string_view v) {
    if (u.empty() || v.empty()) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": empty user id");
    }
    try {
      network.add_follow(std::string(u), std::string(v));
    } catch (const DomainError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  });
  return network;
}

Network read_follow_graph(const std::string& path) {
  return parse_follow_graph(read_text_file(path), path);
}

std::string format_follow_graph(const Network& network) {
  std::string out;
  for (const auto& [u, followers] : network.adjacency()) {
    for (const auto& v : followers) out += u + '\t' + v + '\n';
  }
  return out;
}

}  // namespace vshape
