#include "leomap/probe.hpp"

#include <fstream>

namespace leomap {

Blocklist Blocklist::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::InvalidArgument, "cannot open blocklist " + path);
  Blocklist list;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto prefix = Ipv6Prefix::parse(text);
    if (!prefix)
      fail(Errc::InvalidArgument,
           path + ":" + std::to_string(line_no) + ": bad prefix in blocklist");
    list.prefixes.push_back(*prefix);
  }
  return list;
}

}  // namespace leomap
