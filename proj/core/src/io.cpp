#include "birotation/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

#include "birotation/error.hpp"

namespace birot {

namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& msg) { throw Error(ErrorCode::kInput, msg); }

std::size_t LineOf(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

json ParseJson(std::string_view text, const char* what) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    Fail(std::string(what) + ": syntax error at line " +
         std::to_string(LineOf(text, e.byte)) + ": " + e.what());
  } catch (const json::exception& e) {
    // e.g. a number literal that overflows a double
    Fail(std::string(what) + ": " + e.what());
  }
}

const json& Field(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object()) Fail(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) Fail(where + ": missing field '" + key + "'");
  return *it;
}

double Number(const json& v, const std::string& where) {
  if (!v.is_number()) Fail(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) Fail(where + ": number is not finite");
  return d;
}

std::vector<double> Numbers(const json& v, std::size_t count, const std::string& where) {
  if (!v.is_array() || v.size() != count) {
    Fail(where + ": expected an array of " + std::to_string(count) + " numbers");
  }
  std::vector<double> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(Number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Intrinsics ReadIntrinsics(const json& obj, const std::string& where) {
  Intrinsics k;
  k.fx = Number(Field(obj, "fx", where), where + ".fx");
  k.fy = Number(Field(obj, "fy", where), where + ".fy");
  k.u0 = Number(Field(obj, "u0", where), where + ".u0");
  k.v0 = Number(Field(obj, "v0", where), where + ".v0");
  try {
    k.Validate();
  } catch (const Error& e) {
    Fail(where + ": " + e.what());
  }
  return k;
}

void WriteIntrinsics(std::string& out, const Intrinsics& k) {
  out += "{\"fx\": " + FormatDouble(k.fx) + ", \"fy\": " + FormatDouble(k.fy) +
         ", \"u0\": " + FormatDouble(k.u0) + ", \"v0\": " + FormatDouble(k.v0) + "}";
}

template <typename It>
std::string JoinNumbers(It begin, It end) {
  std::string out = "[";
  for (It it = begin; it != end; ++it) {
    if (it != begin) out += ", ";
    out += FormatDouble(*it);
  }
  return out + "]";
}

}  // namespace

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string FormatCorrespondences(const CorrespondenceSet& set) {
  std::string out = "{\n  \"intrinsics1\": ";
  WriteIntrinsics(out, set.intrinsics1());
  out += ",\n  \"intrinsics2\": ";
  WriteIntrinsics(out, set.intrinsics2());
  out += ",\n  \"matches\": [";
  for (std::size_t n = 0; n < set.size(); ++n) {
    const Correspondence& c = set[n];
    const double q[4] = {c.p1.x(), c.p1.y(), c.p2.x(), c.p2.y()};
    out += n == 0 ? "\n    " : ",\n    ";
    out += JoinNumbers(q, q + 4);
  }
  out += "\n  ]\n}\n";
  return out;
}

CorrespondenceSet ParseCorrespondences(std::string_view text) {
  const json doc = ParseJson(text, "correspondence file");
  const Intrinsics k1 = ReadIntrinsics(Field(doc, "intrinsics1", "correspondence file"), "intrinsics1");
  const Intrinsics k2 = ReadIntrinsics(Field(doc, "intrinsics2", "correspondence file"), "intrinsics2");
  const json& matches = Field(doc, "matches", "correspondence file");
  if (!matches.is_array()) Fail("matches: expected an array");
  if (matches.empty()) Fail("matches: no correspondences");
  CorrespondenceSet set(k1, k2);
  for (std::size_t n = 0; n < matches.size(); ++n) {
    const auto q = Numbers(matches[n], 4, "matches[" + std::to_string(n) + "]");
    set.Add(Vec2(q[0], q[1]), Vec2(q[2], q[3]));
  }
  return set;
}

PoseFile PoseFileFrom(const RelativePose& pose) {
  PoseFile out;
  out.rotation = pose.rotation;
  out.translation = pose.translation;
  out.axis = Index(pose.axis);
  out.metric = pose.metric;
  return out;
}

std::string FormatPose(const PoseFile& pose) {
  const Mat3& r = pose.rotation.matrix();
  std::string out = "{\n  \"rotation\": [";
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i + j > 0) out += ", ";
      out += FormatDouble(r(i, j));
    }
  }
  out += "],\n  \"translation\": " +
         JoinNumbers(pose.translation.data(), pose.translation.data() + 3);
  if (pose.axis) out += ",\n  \"axis\": " + std::to_string(*pose.axis);
  if (pose.metric) out += ",\n  \"metric\": " + FormatDouble(*pose.metric);
  if (pose.converged) out += std::string(",\n  \"converged\": ") + (*pose.converged ? "true" : "false");
  if (pose.initialization) out += ",\n  \"initialization\": " + json(*pose.initialization).dump();
  if (pose.beta) out += ",\n  \"beta\": " + JoinNumbers(pose.beta->begin(), pose.beta->end());
  out += "\n}\n";
  return out;
}

PoseFile ParsePose(std::string_view text, std::vector<std::string>* warnings) {
  const json doc = ParseJson(text, "pose file");
  PoseFile out;
  const auto r = Numbers(Field(doc, "rotation", "pose file"), 9, "rotation");
  Mat3 m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = r[static_cast<std::size_t>(3 * i + j)];
  }
  if (IsRotationMatrix(m, 1e-9)) {
    out.rotation = Rotation::FromMatrix(m);
  } else if (IsRotationMatrix(m, 1e-6)) {
    out.rotation = Rotation::Nearest(m);
  } else if (IsRotationMatrix(m, 1e-3)) {
    out.rotation = Rotation::Nearest(m);
    if (warnings) warnings->push_back("rotation: re-orthonormalized (off SO(3) by more than 1e-6)");
  } else {
    Fail("rotation: not a rotation matrix within 1e-3");
  }
  const auto t = Numbers(Field(doc, "translation", "pose file"), 3, "translation");
  out.translation = Vec3(t[0], t[1], t[2]);

  if (const auto it = doc.find("axis"); it != doc.end()) {
    if (!it->is_number_integer() || it->get<int>() < 1 || it->get<int>() > 3) {
      Fail("axis: expected 1, 2 or 3");
    }
    out.axis = it->get<int>();
  }
  if (const auto it = doc.find("metric"); it != doc.end()) out.metric = Number(*it, "metric");
  if (const auto it = doc.find("converged"); it != doc.end()) {
    if (!it->is_boolean()) Fail("converged: expected true or false");
    out.converged = it->get<bool>();
  }
  if (const auto it = doc.find("initialization"); it != doc.end()) {
    if (!it->is_string()) Fail("initialization: expected a string");
    out.initialization = it->get<std::string>();
  }
  if (const auto it = doc.find("beta"); it != doc.end()) {
    const auto b = Numbers(*it, 3, "beta");
    out.beta = std::array<double, 3>{b[0], b[1], b[2]};
  }
  return out;
}

std::string FormatSweepReport(std::span<const SweepRecord> records) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const SweepRecord& r : records) {
    out += FormatDouble(r.parameter) + "," + FormatDouble(r.mean_rotation_deg) + "," +
           FormatDouble(r.mean_translation_deg) + "," + std::to_string(r.failures) + "," +
           std::to_string(r.pairs) + "\n";
  }
  return out;
}

std::vector<SweepRecord> ParseSweepReport(std::string_view text) {
  std::vector<SweepRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1) {
      if (line != kSweepHeader) Fail("sweep report line 1: unexpected header");
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> cells;
    for (std::size_t s = 0;;) {
      const std::size_t c = line.find(',', s);
      cells.push_back(line.substr(s, c == std::string_view::npos ? std::string_view::npos : c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    const std::string where = "sweep report line " + std::to_string(line_no);
    if (cells.size() != 5) Fail(where + ": expected 5 fields");
    double v[3];
    for (int i = 0; i < 3; ++i) {
      const auto cell = cells[static_cast<std::size_t>(i)];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v[i]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        Fail(where + ": field " + std::to_string(i + 1) + " is not a number");
      }
    }
    int counts[2];
    for (int i = 0; i < 2; ++i) {
      const auto cell = cells[static_cast<std::size_t>(3 + i)];
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), counts[i]);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || counts[i] < 0) {
        Fail(where + ": field " + std::to_string(4 + i) + " is not a count");
      }
    }
    out.push_back({v[0], v[1], v[2], counts[0], counts[1]});
  }
  if (line_no == 0) Fail("sweep report: empty");
  return out;
}

std::string FormatMetricsReport(const ErrorSummary& s) {
  const auto vec = [](const Vec3& v) { return JoinNumbers(v.data(), v.data() + 3); };
  std::string out = "{\n  \"delta_theta_bar\": " + vec(s.delta_theta_bar) +
                    ",\n  \"delta_t_bar\": " + vec(s.delta_t_bar) +
                    ",\n  \"rotation_only\": " + (s.rotation_only ? "true" : "false") +
                    ",\n  \"pairs\": [";
  for (std::size_t m = 0; m < s.per_pair.size(); ++m) {
    out += m == 0 ? "\n    " : ",\n    ";
    out += "{\"rotation_err_deg\": " + FormatDouble(s.per_pair[m].rotation_deg) +
           ", \"translation_err_deg\": " + FormatDouble(s.per_pair[m].translation_deg) + "}";
  }
  out += "\n  ],\n  \"auc\": [";
  bool first = true;
  for (const auto& [psi, auc] : s.auc) {
    out += first ? "\n    " : ",\n    ";
    first = false;
    out += "{\"threshold_deg\": " + FormatDouble(psi) + ", \"auc\": " + FormatDouble(auc) + "}";
  }
  out += "\n  ]\n}\n";
  return out;
}

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) Fail(path + ": read error");
  return ss.str();
}

void WriteTextFileAtomic(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(path + ": cannot create temporary file");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      Fail(path + ": write error");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::remove(tmp.c_str());
    Fail(path + ": cannot replace (" + ec.message() + ")");
  }
}

}  // namespace birot
