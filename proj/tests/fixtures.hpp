#pragma once

#include <unistd.h>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ivz/eval/protocol.hpp"
#include "ivz/io/binary.hpp"

namespace ivz::test {

/// Tag sets realising W = [[0.6,0.2],[0.3,0.9]] for pred {0,1} vs gt {2,3}. Region sizes
/// (members: pred0, pred1, gt0, gt1) were solved for offline; the IOUs are checked in test_eval.
inline std::vector<eval::TagSet> fixture_tags() {
  struct Region {
    int count;
    bool in[4];
  };
  const Region regions[] = {{20, {false, true, false, true}},
                            {5, {true, false, false, false}},
                            {1, {true, true, false, false}},
                            {2, {true, true, true, false}},
                            {7, {true, true, true, true}}};
  std::vector<eval::TagSet> tags(4);
  int next = 0;
  for (const auto& r : regions)
    for (int c = 0; c < r.count; ++c, ++next)
      for (int s = 0; s < 4; ++s)
        if (r.in[s]) tags[s].push_back("t" + std::to_string(next));
  for (auto& t : tags) t = eval::make_tag_set(t);
  return tags;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag = "ivz") {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

/// Directory contents as relative path -> bytes.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), dir).string()] = io::read_file(e.path());
  return out;
}

}  // namespace ivz::test
