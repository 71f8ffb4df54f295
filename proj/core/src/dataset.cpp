#include "tsal/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace tsal {

namespace {

using json = nlohmann::json;

Error line_error(std::size_t line, const std::string& what) {
  return Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string_view to_string(Split s) { return s == Split::test ? "test" : "pool"; }

Dataset::Dataset(std::string name, LabelSchema schema, std::size_t feature_dim)
    : name_(std::move(name)), schema_(std::move(schema)), feature_dim_(feature_dim) {
  if (feature_dim_ < 1) throw Error(ErrorCode::invalid_argument, "feature_dim must be >= 1");
}

void Dataset::add(Sample sample, Split split) {
  if (sample.id.empty()) throw Error(ErrorCode::invalid_argument, "sample id is empty");
  if (sample.features.size() != feature_dim_) {
    throw Error(ErrorCode::shape_mismatch, "sample '" + sample.id + "' has " +
                                               std::to_string(sample.features.size()) +
                                               " features, expected " + std::to_string(feature_dim_));
  }
  if (sample.truth && sample.truth->size() != schema_.size()) {
    throw Error(ErrorCode::invalid_combination, "sample '" + sample.id + "' truth has wrong length");
  }
  if (index_.count(sample.id)) {
    throw Error(ErrorCode::duplicate_id, "duplicate sample id '" + sample.id + "'");
  }
  index_.emplace(sample.id, samples_.size());
  samples_.push_back(std::move(sample));
  splits_.push_back(split);
}

const Sample* Dataset::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &samples_[it->second];
}

const Sample& Dataset::at(std::string_view id) const {
  const auto* s = find(id);
  if (!s) throw Error(ErrorCode::unknown_id, "unknown sample id '" + std::string(id) + "'");
  return *s;
}

std::vector<Sample> Dataset::subset(Split split) const {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (splits_[i] == split) out.push_back(samples_[i]);
  }
  return out;
}

std::vector<std::string> Dataset::ids(Split split) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (splits_[i] == split) out.push_back(samples_[i].id);
  }
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  if (name_ != other.name_ || !(schema_ == other.schema_) || feature_dim_ != other.feature_dim_ ||
      splits_ != other.splits_ || samples_.size() != other.samples_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& a = samples_[i];
    const auto& b = other.samples_[i];
    if (a.id != b.id || a.features != b.features || a.truth != b.truth || a.image_path != b.image_path) {
      return false;
    }
  }
  return true;
}

std::string dataset_to_string(const Dataset& data) {
  std::string out;
  json header = {{"format", "tsal-dataset"},
                 {"version", 1},
                 {"name", data.name()},
                 {"feature_dim", data.feature_dim()},
                 {"labels", data.schema().labels()},
                 {"exclusive_index", data.schema().exclusive_index()}};
  out += header.dump();
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data.samples()[i];
    json rec;
    rec["id"] = s.id;
    rec["split"] = to_string(data.splits()[i]);
    if (s.truth) rec["truth"] = encode_combination(*s.truth);
    rec["features"] = s.features;
    if (!s.image_path.empty()) rec["image_path"] = s.image_path;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

Dataset dataset_from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<Dataset> data;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw line_error(line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      if (!data) {
        if (j.value("format", "") != "tsal-dataset" || j.value("version", 0) != 1) {
          throw line_error(line_no, "missing tsal-dataset version 1 header");
        }
        LabelSchema schema(j.at("labels").get<std::vector<std::string>>(),
                           j.value("exclusive_index", std::size_t{0}));
        data.emplace(j.value("name", ""), std::move(schema), j.at("feature_dim").get<std::size_t>());
        continue;
      }
      Sample s;
      s.id = j.at("id").get<std::string>();
      s.features = j.at("features").get<std::vector<double>>();
      if (j.contains("truth")) s.truth = decode_combination(j.at("truth").get<std::string>(), data->schema());
      s.image_path = j.value("image_path", "");
      const std::string split = j.value("split", "pool");
      if (split != "pool" && split != "test") throw line_error(line_no, "unknown split '" + split + "'");
      data->add(std::move(s), split == "test" ? Split::test : Split::pool);
    } catch (const json::exception& e) {
      throw line_error(line_no, e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::parse_error) throw;
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!data) throw Error(ErrorCode::empty_input, "empty dataset: no header");
  if (data->size() == 0) throw Error(ErrorCode::empty_input, "empty dataset: no records");
  return std::move(*data);
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << dataset_to_string(data);
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return dataset_from_string(ss.str());
}

std::string dataset_hash(const Dataset& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : dataset_to_string(data)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace tsal
