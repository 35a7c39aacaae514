// Copyright 2026 The dpwerm Authors
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

#ifndef DPWERM_IO_HPP_
#define DPWERM_IO_HPP_

#include <istream>
#include <string>
#include <vector>

#include "dpwerm/owl.hpp"
#include "dpwerm/simgen.hpp"
#include "dpwerm/tuner.hpp"

namespace dpwerm {

// Trial CSV: header names columns x1..xd, A, B, and optionally P, in any
// order. A accepts {-1, +1} or {0, 1} coding (0 maps to -1); a missing P
// column means a constant propensity of 0.5. Malformed rows raise DataError
// naming the 1-based line.
TrialRecords parse_csv_trial(std::istream& in, const std::string& source_name);
TrialRecords parse_csv_trial(const std::string& path);

// Doubles are rendered with 17 significant digits so that every emitted
// number parses back to the identical bit pattern; infinities render as
// "inf".
std::string format_double(double value);

// Minimal JSON document builder producing deterministic, round-trippable
// output. Keys are emitted in insertion order.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array(const std::string& key);
  JsonWriter& begin_object(const std::string& key);
  JsonWriter& end_array();
  JsonWriter& field(const std::string& key, double value);
  JsonWriter& field(const std::string& key, std::int64_t value);
  JsonWriter& field(const std::string& key, std::uint64_t value);
  JsonWriter& field(const std::string& key, int value);
  JsonWriter& field(const std::string& key, bool value);
  JsonWriter& field(const std::string& key, const std::string& value);
  // String literals must not decay into the bool overload.
  JsonWriter& field(const std::string& key, const char* value);
  JsonWriter& field(const std::string& key, const std::vector<double>& values);
  JsonWriter& element(double value);
  JsonWriter& element(const std::vector<double>& values);

  std::string str() const { return out_; }

 private:
  void separator();
  std::string out_;
  std::vector<bool> needs_comma_;
};

std::string escape_json(const std::string& raw);

// Serializers for the artifacts the CLI emits.
std::string experiment_table_csv(const ExperimentTable& table);
std::string tune_result_csv(const TuneResult& result);

void write_text_file(const std::string& path, const std::string& contents);

}  // namespace dpwerm

#endif  // DPWERM_IO_HPP_
