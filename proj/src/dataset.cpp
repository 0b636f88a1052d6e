#include "lgrn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "lgrn/error.hpp"
#include "lgrn/fileutil.hpp"
#include "lgrn/image_io.hpp"

namespace lgrn {

namespace fs = std::filesystem;

namespace {

double parse_number(const std::string& field, const std::string& path, int line) {
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || p != e || b == e)
    throw ParseError(path, line, "non-numeric field '" + field + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

void write_points_csv(const fs::path& path, const StrutPointSet& points, const std::vector<double>* scores) {
  if (scores && scores->size() != points.size())
    throw DataError("score count does not match point count for " + path.string());
  write_atomic(path, [&](std::ostream& os) {
    os << (scores ? "x,y,score\n" : "x,y\n");
    for (std::size_t i = 0; i < points.size(); ++i) {
      os << format_double(points.points[i].x) << ',' << format_double(points.points[i].y);
      if (scores) os << ',' << format_double((*scores)[i]);
      os << '\n';
    }
  });
}

ScoredPoints read_points_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read points file " + path.string());
  const std::string p = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(p, 1, "missing header");
  line = strip_cr(line);
  bool with_score = false;
  if (line == "x,y,score") with_score = true;
  else if (line != "x,y") throw ParseError(p, 1, "expected header 'x,y' or 'x,y,score'");

  ScoredPoints out;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != (with_score ? 3u : 2u))
      throw ParseError(p, number, "expected " + std::to_string(with_score ? 3 : 2) + " fields");
    out.points.points.push_back({parse_number(fields[0], p, number), parse_number(fields[1], p, number)});
    if (with_score) out.scores.push_back(parse_number(fields[2], p, number));
  }
  return out;
}

void write_dataset(const std::vector<SynthSample>& samples, const fs::path& dir, const SynthConfig* config) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "points");
  for (const auto& s : samples) {
    const std::string id = sample_id(s.index);
    write_png_gray16(dir / "images" / (id + ".png"), s.image.pixels);
    write_points_csv(dir / "points" / (id + ".csv"), s.points);
  }
  if (config) write_text_atomic(dir / "manifest", format_key_values(to_entries(*config, SynthConfig::fields())));
}

std::vector<SynthSample> read_dataset(const fs::path& dir) {
  std::vector<SynthSample> out;
  const fs::path images = dir / "images";
  if (!fs::is_directory(images)) {
    if (fs::exists(dir) && !fs::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    return out;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images))
    if (entry.path().extension() == ".png") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    SynthSample s;
    const std::string stem = f.stem().string();
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), s.index);
    if (ec != std::errc{} || ptr != stem.data() + stem.size())
      throw DataError("image file name is not a sample index: " + f.string());
    s.image = {read_png_gray(f), Provenance::kSynthetic};
    const fs::path pts = dir / "points" / (stem + ".csv");
    if (!fs::exists(pts)) throw DataError("missing points file " + pts.string());
    s.points = read_points_csv(pts).points;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  return out;
}

std::optional<KeyValues> read_manifest(const fs::path& dir) {
  if (!fs::exists(dir / "manifest")) return std::nullopt;
  return read_key_values(dir / "manifest");
}

}  // namespace lgrn
