#include "gapfm/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace gapfm {

namespace {

constexpr char kMagic[8] = {'G', 'A', 'P', 'F', 'M', 'B', 'I', 'N'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t Fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] void ParseError(const std::string& path, std::int64_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

bool ParseInt(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  size_t pos = 0;
  try {
    *out = std::stoll(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

struct TripleAccumulator {
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::unordered_map<std::string, UserIndex> user_map;
  std::unordered_map<std::string, ItemIndex> item_map;
  std::unordered_map<std::int64_t, Grade> cells;  // (user << 32) | item
  std::vector<std::int64_t> order;                // first-appearance order
  std::int64_t duplicates = 0;
  Grade y_max = 1;

  UserIndex UserOf(const std::string& id) {
    auto [it, inserted] =
        user_map.try_emplace(id, static_cast<UserIndex>(user_ids.size()));
    if (inserted) user_ids.push_back(id);
    return it->second;
  }

  ItemIndex ItemOf(const std::string& id) {
    auto [it, inserted] =
        item_map.try_emplace(id, static_cast<ItemIndex>(item_ids.size()));
    if (inserted) item_ids.push_back(id);
    return it->second;
  }

  void Add(const std::string& user, const std::string& item, Grade grade) {
    const UserIndex m = UserOf(user);
    const ItemIndex i = ItemOf(item);
    const std::int64_t key =
        (static_cast<std::int64_t>(m) << 32) | static_cast<std::int64_t>(i);
    auto [it, inserted] = cells.try_emplace(key, grade);
    if (!inserted) {
      it->second = grade;  // last write wins
      ++duplicates;
    } else {
      order.push_back(key);
    }
    y_max = std::max(y_max, grade);
  }

  IngestResult Finish(const std::string& path) const {
    if (order.empty()) {
      throw std::runtime_error(path + ": empty input");
    }
    std::vector<UserIndex> users;
    std::vector<ItemIndex> items;
    std::vector<Grade> grades;
    users.reserve(order.size());
    for (std::int64_t key : order) {
      users.push_back(static_cast<UserIndex>(key >> 32));
      items.push_back(static_cast<ItemIndex>(key & 0xffffffff));
      grades.push_back(cells.at(key));
    }
    IngestResult result;
    result.dataset = GradedDataset::FromTriples(
        static_cast<UserIndex>(user_ids.size()),
        static_cast<ItemIndex>(item_ids.size()), y_max, users, items, grades);
    result.user_ids = user_ids;
    result.item_ids = item_ids;
    result.duplicates = duplicates;
    return result;
  }
};

std::vector<std::string> SplitFields(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) fields.push_back(field);
  return fields;
}

void AppendRaw(std::string& buf, const void* data, size_t n) {
  buf.append(static_cast<const char*>(data), n);
}

template <typename T>
void AppendPod(std::string& buf, T value) {
  AppendRaw(buf, &value, sizeof(T));
}

void AppendString(std::string& buf, const std::string& s) {
  AppendPod<std::uint32_t>(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

void AppendStrings(std::string& buf, const std::vector<std::string>& v) {
  AppendPod<std::uint32_t>(buf, static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) AppendString(buf, s);
}

void AppendDoubles(std::string& buf, const std::vector<double>& v) {
  AppendPod<std::uint64_t>(buf, static_cast<std::uint64_t>(v.size()));
  AppendRaw(buf, v.data(), v.size() * sizeof(double));
}

class Reader {
 public:
  explicit Reader(const std::string& data) : data_(data) {}

  template <typename T>
  T Pod() {
    T value;
    Need(sizeof(T));
    std::memcpy(&value, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string String() {
    const auto n = Pod<std::uint32_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<std::string> Strings() {
    const auto n = Pod<std::uint32_t>();
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(String());
    return v;
  }

  std::vector<double> Doubles() {
    const auto n = Pod<std::uint64_t>();
    Need(n * sizeof(double));
    std::vector<double> v(n);
    std::memcpy(v.data(), data_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }

  bool Done() const { return pos_ == data_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error("corrupt model archive: truncated payload");
    }
  }
  const std::string& data_;
  size_t pos_ = 0;
};

}  // namespace

IngestResult LoadMovieLens100K(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  TripleAccumulator acc;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = SplitFields(line, '\t');
    if (fields.size() < 3) {
      ParseError(path, line_no, "expected user<TAB>item<TAB>rating[<TAB>ts]");
    }
    std::int64_t rating = 0;
    if (!ParseInt(fields[2], &rating)) {
      ParseError(path, line_no, "non-integer rating '" + fields[2] + "'");
    }
    if (rating < 1) {
      ParseError(path, line_no, "rating must be >= 1");
    }
    acc.Add(fields[0], fields[1], static_cast<Grade>(rating));
  }
  if (acc.duplicates > 0) {
    ParseError(path, line_no, "duplicate (user, item) rating");
  }
  return acc.Finish(path);
}

IngestResult LoadCsvTriples(const std::string& path, char delimiter,
                            bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  TripleAccumulator acc;
  std::string line;
  std::int64_t line_no = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = SplitFields(line, delimiter);
    if (fields.size() < 3) {
      ParseError(path, line_no, "expected user, item, grade");
    }
    std::int64_t grade = 0;
    if (!ParseInt(fields[2], &grade)) {
      ParseError(path, line_no, "non-integer grade '" + fields[2] + "'");
    }
    if (grade < 1) {
      ParseError(path, line_no, "grade must be >= 1");
    }
    acc.Add(fields[0], fields[1], static_cast<Grade>(grade));
  }
  if (acc.duplicates > 0) {
    std::fprintf(stderr, "warning: %s: %lld duplicate pairs, kept last\n",
                 path.c_str(), static_cast<long long>(acc.duplicates));
  }
  return acc.Finish(path);
}

void SaveModel(const ModelArchive& archive, const std::string& path) {
  std::string payload;
  AppendPod<std::int32_t>(payload, archive.y_max);
  AppendPod<std::int32_t>(payload, archive.model.dim());
  AppendPod<std::int32_t>(payload, archive.model.num_users());
  AppendPod<std::int32_t>(payload, archive.model.num_items());
  AppendPod<double>(payload, archive.hyper.reg);
  AppendPod<double>(payload, archive.hyper.learn_rate);
  AppendPod<std::int32_t>(payload, archive.hyper.select_k);
  AppendPod<std::int32_t>(payload, archive.hyper.itermax);
  AppendPod<std::uint64_t>(payload, archive.hyper.seed);
  AppendPod<std::int32_t>(payload, archive.iterations);
  AppendPod<double>(payload, archive.final_objective);
  AppendStrings(payload, archive.user_ids);
  AppendStrings(payload, archive.item_ids);
  AppendDoubles(payload, archive.model.user_factors());
  AppendDoubles(payload, archive.model.item_factors());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const std::uint64_t size = payload.size();
  out.write(reinterpret_cast<const char*>(&size), sizeof(size));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint64_t checksum = Fnv1a(payload);
  out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
  if (!out) throw std::runtime_error(path + ": write failed");
}

ModelArchive LoadModel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  char magic[8];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": not a model archive");
  }
  std::uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), sizeof(version))) {
    throw std::runtime_error(path + ": corrupt model archive: short header");
  }
  if (version != kFormatVersion) {
    throw std::runtime_error(path + ": unsupported archive version " +
                             std::to_string(version));
  }
  std::uint64_t size = 0;
  if (!in.read(reinterpret_cast<char*>(&size), sizeof(size))) {
    throw std::runtime_error(path + ": corrupt model archive: short header");
  }
  std::string payload(size, '\0');
  if (!in.read(payload.data(), static_cast<std::streamsize>(size))) {
    throw std::runtime_error(path + ": corrupt model archive: truncated");
  }
  std::uint64_t checksum = 0;
  if (!in.read(reinterpret_cast<char*>(&checksum), sizeof(checksum)) ||
      checksum != Fnv1a(payload)) {
    throw std::runtime_error(path + ": corrupt model archive: bad checksum");
  }

  Reader r(payload);
  ModelArchive archive;
  archive.y_max = r.Pod<std::int32_t>();
  const auto dim = r.Pod<std::int32_t>();
  const auto num_users = r.Pod<std::int32_t>();
  const auto num_items = r.Pod<std::int32_t>();
  archive.hyper.dim = dim;
  archive.hyper.reg = r.Pod<double>();
  archive.hyper.learn_rate = r.Pod<double>();
  archive.hyper.select_k = r.Pod<std::int32_t>();
  archive.hyper.itermax = r.Pod<std::int32_t>();
  archive.hyper.seed = r.Pod<std::uint64_t>();
  archive.iterations = r.Pod<std::int32_t>();
  archive.final_objective = r.Pod<double>();
  archive.user_ids = r.Strings();
  archive.item_ids = r.Strings();
  archive.model = ModelFactors(dim, num_users, num_items);
  archive.model.user_factors() = r.Doubles();
  archive.model.item_factors() = r.Doubles();
  if (!r.Done() ||
      archive.model.user_factors().size() !=
          static_cast<size_t>(dim) * num_users ||
      archive.model.item_factors().size() !=
          static_cast<size_t>(dim) * num_items) {
    throw std::runtime_error(path + ": corrupt model archive: bad dimensions");
  }
  return archive;
}

std::string ExportModelText(const ModelArchive& archive) {
  std::ostringstream out;
  out.precision(17);
  out << "format_version " << kFormatVersion << "\n";
  out << "y_max " << archive.y_max << "\n";
  out << "dim " << archive.model.dim() << "\n";
  out << "num_users " << archive.model.num_users() << "\n";
  out << "num_items " << archive.model.num_items() << "\n";
  out << "reg " << archive.hyper.reg << "\n";
  out << "learn_rate " << archive.hyper.learn_rate << "\n";
  out << "select_k " << archive.hyper.select_k << "\n";
  out << "itermax " << archive.hyper.itermax << "\n";
  out << "seed " << archive.hyper.seed << "\n";
  out << "iterations " << archive.iterations << "\n";
  out << "final_objective " << archive.final_objective << "\n";
  for (UserIndex m = 0; m < archive.model.num_users(); ++m) {
    out << "U " << archive.user_ids[static_cast<size_t>(m)];
    const double* u = archive.model.user_col(m);
    for (std::int32_t d = 0; d < archive.model.dim(); ++d) out << " " << u[d];
    out << "\n";
  }
  for (ItemIndex i = 0; i < archive.model.num_items(); ++i) {
    out << "V " << archive.item_ids[static_cast<size_t>(i)];
    const double* v = archive.model.item_col(i);
    for (std::int32_t d = 0; d < archive.model.dim(); ++d) out << " " << v[d];
    out << "\n";
  }
  return out.str();
}

}  // namespace gapfm
