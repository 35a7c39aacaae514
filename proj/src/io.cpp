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

#include "dpwerm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dpwerm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

double parse_number(const std::string& field, int line_number,
                    const std::string& source) {
  try {
    std::size_t consumed = 0;
    const double value = std::stod(field, &consumed);
    if (consumed != field.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return value;
  } catch (const std::exception&) {
    std::ostringstream msg;
    msg << source << ": line " << line_number << ": '" << field
        << "' is not a number";
    throw DataError(msg.str());
  }
}

}  // namespace

TrialRecords parse_csv_trial(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(source + ": empty file");
  }
  const std::vector<std::string> header = split_csv_line(line);

  // Map header names to roles. Feature columns must be x1..xd.
  std::vector<int> feature_cols;  // position of x(k+1) at index k
  int col_a = -1;
  int col_b = -1;
  int col_p = -1;
  feature_cols.assign(header.size(), -1);
  int d = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (name == "A") {
      col_a = static_cast<int>(c);
    } else if (name == "B") {
      col_b = static_cast<int>(c);
    } else if (name == "P") {
      col_p = static_cast<int>(c);
    } else if (name.size() >= 2 && name[0] == 'x') {
      int index = 0;
      try {
        index = std::stoi(name.substr(1));
      } catch (const std::exception&) {
        throw DataError(source + ": unknown column '" + name + "'");
      }
      if (index < 1 || static_cast<std::size_t>(index) > header.size()) {
        throw DataError(source + ": feature column '" + name +
                        "' out of range");
      }
      if (feature_cols[static_cast<std::size_t>(index - 1)] != -1) {
        throw DataError(source + ": duplicate column '" + name + "'");
      }
      feature_cols[static_cast<std::size_t>(index - 1)] = static_cast<int>(c);
      d = std::max(d, index);
    } else {
      throw DataError(source + ": unknown column '" + name + "'");
    }
  }
  if (col_a < 0 || col_b < 0) {
    throw DataError(source + ": header must contain columns A and B");
  }
  if (d == 0) {
    throw DataError(source + ": header must contain feature columns x1..xd");
  }
  for (int k = 0; k < d; ++k) {
    if (feature_cols[static_cast<std::size_t>(k)] < 0) {
      std::ostringstream msg;
      msg << source << ": missing feature column x" << k + 1;
      throw DataError(msg.str());
    }
  }

  TrialRecords records;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() && in.peek() == EOF) break;  // trailing newline
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << source << ": line " << line_number << ": expected "
          << header.size() << " fields, got " << fields.size();
      throw DataError(msg.str());
    }
    TrialRecord rec;
    rec.x.resize(d);
    for (int k = 0; k < d; ++k) {
      rec.x[k] = parse_number(
          fields[static_cast<std::size_t>(feature_cols[static_cast<std::size_t>(k)])],
          line_number, source);
    }
    const double a =
        parse_number(fields[static_cast<std::size_t>(col_a)], line_number, source);
    if (a == 1.0) {
      rec.treatment = 1;
    } else if (a == -1.0 || a == 0.0) {
      rec.treatment = -1;
    } else {
      std::ostringstream msg;
      msg << source << ": line " << line_number << ": treatment " << a
          << " is not in {-1, 1} or {0, 1}";
      throw DataError(msg.str());
    }
    rec.benefit =
        parse_number(fields[static_cast<std::size_t>(col_b)], line_number, source);
    if (col_p >= 0) {
      rec.propensity = parse_number(fields[static_cast<std::size_t>(col_p)],
                                    line_number, source);
      if (!(rec.propensity > 0.0) || !(rec.propensity < 1.0)) {
        std::ostringstream msg;
        msg << source << ": line " << line_number << ": propensity "
            << rec.propensity << " outside (0, 1)";
        throw DataError(msg.str());
      }
    } else {
      rec.propensity = 0.5;
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) {
    throw DataError(source + ": no data rows");
  }
  return records;
}

TrialRecords parse_csv_trial(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path + ": cannot open file");
  }
  return parse_csv_trial(in, path);
}

std::string format_double(double value) {
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  if (std::isnan(value)) {
    return "nan";
  }
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string escape_json(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buffer[8];
          std::snprintf(buffer, sizeof(buffer), "\\u%04x", c);
          out += buffer;
        } else {
          out += c;
        }
    }
  }
  return out;
}

void JsonWriter::separator() {
  if (!needs_comma_.empty()) {
    if (needs_comma_.back()) out_ += ',';
    needs_comma_.back() = true;
  }
}

JsonWriter& JsonWriter::begin_object() {
  separator();
  out_ += '{';
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::begin_object(const std::string& key) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":{";
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  needs_comma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array(const std::string& key) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":[";
  needs_comma_.push_back(false);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  needs_comma_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, double value) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":";
  // JSON has no infinity literal; emit it as a string.
  if (std::isfinite(value)) {
    out_ += format_double(value);
  } else {
    out_ += '"';
    out_ += format_double(value);
    out_ += '"';
  }
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, std::int64_t value) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":";
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, std::uint64_t value) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":";
  out_ += std::to_string(value);
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, int value) {
  return field(key, static_cast<std::int64_t>(value));
}

JsonWriter& JsonWriter::field(const std::string& key, bool value) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":";
  out_ += value ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, const std::string& value) {
  separator();
  out_ += '"';
  out_ += escape_json(key);
  out_ += "\":\"";
  out_ += escape_json(value);
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::field(const std::string& key, const char* value) {
  return field(key, std::string(value));
}

JsonWriter& JsonWriter::field(const std::string& key,
                              const std::vector<double>& values) {
  begin_array(key);
  for (double v : values) element(v);
  return end_array();
}

JsonWriter& JsonWriter::element(double value) {
  separator();
  if (std::isfinite(value)) {
    out_ += format_double(value);
  } else {
    out_ += '"';
    out_ += format_double(value);
    out_ += '"';
  }
  return *this;
}

JsonWriter& JsonWriter::element(const std::vector<double>& values) {
  separator();
  out_ += '[';
  needs_comma_.push_back(false);
  for (double v : values) element(v);
  out_ += ']';
  needs_comma_.pop_back();
  return *this;
}

std::string experiment_table_csv(const ExperimentTable& table) {
  std::string out =
      "epsilon,n,repeats,acc_mean,acc_lo,acc_hi,val_mean,val_lo,val_hi\n";
  for (const ExperimentCell& cell : table.cells) {
    out += format_double(cell.epsilon);
    out += ',';
    out += std::to_string(cell.n);
    out += ',';
    out += std::to_string(cell.repeats);
    for (double v : {cell.acc_mean, cell.acc_lo, cell.acc_hi, cell.val_mean,
                     cell.val_lo, cell.val_hi}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string tune_result_csv(const TuneResult& result) {
  std::string out = "gamma,mean_metric\n";
  for (std::size_t i = 0; i < result.candidate_gammas.size(); ++i) {
    out += format_double(result.candidate_gammas[i]);
    out += ',';
    out += format_double(result.mean_metric[i]);
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError(path + ": cannot open for writing");
  }
  out << contents;
  if (!out) {
    throw DataError(path + ": write failed");
  }
}

}  // namespace dpwerm
