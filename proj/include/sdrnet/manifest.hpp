#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sdrnet/common.hpp"

namespace sdrnet {

enum class Dataset { Vaihingen, Potsdam, Custom };

struct SplitManifest {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

// The published Vaihingen split. The source text places IDs '7' and '28' in
// both the training and validation lists; the overlap is reproduced as
// printed (see make_disjoint for the strict variant).
inline SplitManifest vaihingen_manifest() {
  SplitManifest m;
  m.train_ids = {"1",  "3",  "5",  "7",  "11", "13", "15", "17",
                 "21", "23", "26", "28", "30", "32", "34", "37"};
  m.val_ids = {"7", "28"};
  m.test_ids = {"2",  "4",  "6",  "8",  "10", "12", "14", "16", "20",
                "22", "24", "27", "29", "31", "33", "35", "38"};
  return m;
}

// The published Potsdam split; validation IDs '4_10' and '7_10' likewise
// overlap the training list.
inline SplitManifest potsdam_manifest() {
  SplitManifest m;
  m.train_ids = {"2_10", "2_11", "2_12", "3_10", "3_11", "3_12",
                 "4_10", "4_11", "4_12", "5_10", "5_11", "5_12",
                 "6_10", "6_11", "6_12", "7_10", "7_12", "7_11",
                 "6_7",  "6_8",  "6_9",  "7_7",  "7_8",  "7_9"};
  m.test_ids = {"2_13", "2_14", "3_13", "3_14", "4_13", "4_14", "4_15",
                "5_13", "5_14", "5_15", "6_13", "6_14", "6_15", "7_13"};
  m.val_ids = {"4_10", "7_10"};
  return m;
}

// Removes validation IDs from the training list, for runs that must not
// validate on training frames.
inline SplitManifest make_disjoint(const SplitManifest& m) {
  SplitManifest out = m;
  out.train_ids.clear();
  for (const std::string& id : m.train_ids) {
    bool in_val = false;
    for (const std::string& v : m.val_ids)
      if (v == id) in_val = true;
    if (!in_val) out.train_ids.push_back(id);
  }
  return out;
}

// Custom manifests are line oriented: [train] / [val] / [test] section
// headers with one ID per line; '#' starts a comment. IDs may not repeat
// anywhere in the file.
inline SplitManifest parse_split_manifest(const std::string& text) {
  SplitManifest m;
  std::vector<std::string>* section = nullptr;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int ids = 0;
  std::vector<std::pair<std::string, int>> seen;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    size_t e = line.find_last_not_of(" \t\r");
    std::string tok = line.substr(b, e - b + 1);
    if (tok == "[train]") {
      section = &m.train_ids;
    } else if (tok == "[val]") {
      section = &m.val_ids;
    } else if (tok == "[test]") {
      section = &m.test_ids;
    } else if (tok.front() == '[') {
      fail(ErrorKind::Parse,
           strf("line %d: unknown section '%s'", line_no, tok.c_str()));
    } else {
      check(section != nullptr, ErrorKind::Parse,
            strf("line %d: ID '%s' outside any section", line_no, tok.c_str()));
      check(tok.find_first_of(" \t") == std::string::npos, ErrorKind::Parse,
            strf("line %d: one ID per line, got '%s'", line_no, tok.c_str()));
      for (const auto& [prev, prev_line] : seen)
        check(prev != tok, ErrorKind::Parse,
              strf("line %d: ID '%s' already listed on line %d", line_no,
                   tok.c_str(), prev_line));
      seen.emplace_back(tok, line_no);
      section->push_back(tok);
      ++ids;
    }
  }
  check(ids > 0, ErrorKind::Parse, "manifest lists no IDs");
  return m;
}

inline SplitManifest load_split_manifest(Dataset dataset,
                                         const std::string& path = "") {
  switch (dataset) {
    case Dataset::Vaihingen: return vaihingen_manifest();
    case Dataset::Potsdam: return potsdam_manifest();
    case Dataset::Custom: break;
  }
  std::ifstream in(path);
  check(in.good(), ErrorKind::Data,
        strf("cannot open manifest: %s", path.c_str()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_split_manifest(ss.str());
}

}  // namespace sdrnet
