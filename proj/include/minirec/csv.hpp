//
// Copyright 2026 The Minirec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "minirec/dataset.hpp"
#include "minirec/errors.hpp"
#include "minirec/format.hpp"

namespace minirec {

/// Column-name mapping for interaction CSV files. The default matches the
/// canonical header `user,item,rating,timestamp[,group]`.
struct CsvSchema {
  std::string user = "user";
  std::string item = "item";
  std::string rating = "rating";
  std::string timestamp = "timestamp";
  std::string group = "group";  // optional column
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline double parse_double(const std::string& s, int line_no, const char* what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(p, &end);
  if (end == p || *end != '\0')
    throw DataError("csv: malformed " + std::string(what) + " '" + s + "' at line " +
                    std::to_string(line_no));
  return v;
}

inline std::int64_t parse_int(const std::string& s, int line_no, const char* what) {
  const char* p = s.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(p, &end, 10);
  if (end == p || *end != '\0')
    throw DataError("csv: malformed " + std::string(what) + " '" + s + "' at line " +
                    std::to_string(line_no));
  return v;
}

// Interaction CSV is the unquoted subset: a field must not contain the
// separator or a line break.
inline void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw DataError("csv: " + std::string(what) + " '" + s +
                    "' contains a separator or line break");
}

}  // namespace detail

/// Parses an interaction log. Duplicate (user, item) pairs are collapsed
/// to the latest timestamp. Rating bounds default to the observed min/max;
/// pass explicit bounds to enforce them instead (out-of-bounds ratings
/// then fail with their line number).
inline Dataset load_csv(std::istream& in, const CsvSchema& schema = {},
                        std::optional<std::pair<double, double>> bounds = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file");
  const auto header = detail::split_fields(line);
  auto col = [&](const std::string& name) -> int {
    auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_user = col(schema.user);
  const int c_item = col(schema.item);
  const int c_rating = col(schema.rating);
  const int c_ts = col(schema.timestamp);
  const int c_group = col(schema.group);
  if (c_user < 0 || c_item < 0 || c_rating < 0 || c_ts < 0)
    throw DataError("csv: header must contain columns '" + schema.user + "," + schema.item +
                    "," + schema.rating + "," + schema.timestamp + "', got '" + line + "'");

  Dataset d;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() < header.size())
      throw DataError("csv: expected " + std::to_string(header.size()) + " fields at line " +
                      std::to_string(line_no) + ", got " + std::to_string(fields.size()));
    Interaction x;
    x.user_id = fields[c_user];
    x.item_id = fields[c_item];
    x.rating = detail::parse_double(fields[c_rating], line_no, "rating");
    x.timestamp = detail::parse_int(fields[c_ts], line_no, "timestamp");
    if (x.user_id.empty() || x.item_id.empty())
      throw DataError("csv: empty user or item id at line " + std::to_string(line_no));
    if (x.timestamp < 0)
      throw DataError("csv: negative timestamp at line " + std::to_string(line_no));
    if (bounds && (x.rating < bounds->first || x.rating > bounds->second))
      throw DataError("csv: rating " + format_double(x.rating) + " outside bounds [" +
                      format_double(bounds->first) + ", " + format_double(bounds->second) +
                      "] at line " + std::to_string(line_no));
    if (c_group >= 0 && !fields[c_group].empty()) {
      x.group = fields[c_group];
      auto it = d.group_map.find(x.user_id);
      if (it == d.group_map.end())
        d.group_map[x.user_id] = x.group;
      else if (it->second != x.group)
        throw DataError("csv: conflicting group for user '" + x.user_id + "' at line " +
                        std::to_string(line_no));
    }
  d.interactions.push_back(std::move(x));
  }
  if (d.interactions.empty()) throw DataError("csv: file has a header but no data rows");

  // Backfill group labels for rows whose group field was blank but whose
  // user carries a label elsewhere (Dataset invariant: interaction group ==
  // group_map[user]).
  for (auto& x : d.interactions) {
    auto it = d.group_map.find(x.user_id);
    if (it != d.group_map.end()) x.group = it->second;
  }

  if (bounds) {
    d.rating_min = bounds->first;
    d.rating_max = bounds->second;
  } else {
    double lo = d.interactions.front().rating, hi = lo;
    for (const auto& x : d.interactions) {
      lo = std::min(lo, x.rating);
      hi = std::max(hi, x.rating);
    }
    d.rating_min = lo;
    d.rating_max = hi;
  }
  return deduplicate(d);
}

inline Dataset load_csv(const std::string& path, const CsvSchema& schema = {},
                        std::optional<std::pair<double, double>> bounds = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  return load_csv(in, schema, bounds);
}

/// Writes the canonical interaction CSV: header
/// `user,item,rating,timestamp[,group]`, rows sorted by (user_id, item_id).
/// The group column is emitted only when the dataset has group labels.
inline void write_csv(std::ostream& out, const Dataset& d) {
  std::vector<std::size_t> order(d.interactions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = d.interactions[a];
    const auto& y = d.interactions[b];
    if (x.user_id != y.user_id) return x.user_id < y.user_id;
    return x.item_id < y.item_id;
  });
  const bool groups = d.has_groups();
  out << (groups ? "user,item,rating,timestamp,group\n" : "user,item,rating,timestamp\n");
  for (std::size_t i : order) {
    const auto& x = d.interactions[i];
    detail::check_field(x.user_id, "user id");
    detail::check_field(x.item_id, "item id");
    detail::check_field(x.group, "group");
    out << x.user_id << ',' << x.item_id << ',' << format_double(x.rating) << ','
        << x.timestamp;
    if (groups) out << ',' << x.group;
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("csv: cannot write '" + path + "'");
  write_csv(out, d);
}

}  // namespace minirec
