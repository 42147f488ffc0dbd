#include "zdids/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include "zdids/error.hpp"

namespace zdids {

namespace {

using K = FeatureKind;

constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
};

bool is_categorical_position(std::size_t i) { return i >= 1 && i <= 3; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_nonneg_real(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last && std::isfinite(out) && out >= 0.0;
}

}  // namespace

const std::array<FeatureDescriptor, kNumFeatures>& kdd_features() {
  static const auto features = [] {
    std::array<FeatureDescriptor, kNumFeatures> out;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      out[i] = {std::string(kFeatureNames[i]),
                is_categorical_position(i) ? K::kCategorical : K::kContinuous};
    }
    return out;
  }();
  return features;
}

std::vector<std::size_t> FeatureSchema::categorical_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].kind == K::kCategorical) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FeatureSchema::continuous_positions() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].kind == K::kContinuous) out.push_back(i);
  }
  return out;
}

std::size_t FeatureSchema::encoded_width() const {
  std::size_t width = continuous_count();
  for (const auto& vocab : vocabularies) width += vocab.size();
  return width;
}

std::string normalize_label(std::string_view label) {
  label = trim(label);
  if (!label.empty() && label.back() == '.') label.remove_suffix(1);
  std::string out(label);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void for_each_kdd_record(std::istream& in, const std::function<void(RawRecord&&)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  std::array<std::string_view, kNumFields> fields;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;

    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      const std::string_view field =
          view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (count < kNumFields) fields[count] = field;
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count != kNumFields) throw MalformedLine(line_no, count);

    RawRecord record;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      const std::string_view value = trim(fields[i]);
      if (!is_categorical_position(i)) {
        double parsed;
        if (!parse_nonneg_real(value, parsed)) throw TypeError(line_no, i);
      }
      record.values[i] = std::string(value);
    }
    record.label = normalize_label(fields[kNumFeatures]);
    if (record.label.empty()) throw MalformedLine(line_no, count);
    sink(std::move(record));
  }
}

std::vector<RawRecord> parse_kdd(std::istream& in) {
  std::vector<RawRecord> out;
  for_each_kdd_record(in, [&](RawRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

std::string format_kdd(const RawRecord& record) {
  std::string line;
  for (const auto& v : record.values) {
    line += v;
    line += ',';
  }
  line += record.label;
  line += '.';
  return line;
}

void write_kdd(std::ostream& out, std::span<const RawRecord> records) {
  for (const auto& r : records) out << format_kdd(r) << '\n';
}

SchemaBuilder::SchemaBuilder() {
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (is_categorical_position(i)) categorical_.push_back(i);
  }
  seen_values_.resize(categorical_.size());
}

void SchemaBuilder::add(const RawRecord& record) {
  for (std::size_t c = 0; c < categorical_.size(); ++c) {
    seen_values_[c].insert(record.values[categorical_[c]]);
  }
  ++labels_[record.label];
  ++seen_;
}

FeatureSchema SchemaBuilder::build() const {
  if (seen_ == 0) throw EmptyInput("cannot build a schema from zero records");
  FeatureSchema schema;
  const auto& features = kdd_features();
  schema.features.assign(features.begin(), features.end());
  for (const auto& values : seen_values_) {
    schema.vocabularies.emplace_back(values.begin(), values.end());
  }
  return schema;
}

FeatureSchema build_schema(std::span<const RawRecord> records) {
  SchemaBuilder builder;
  for (const auto& r : records) builder.add(r);
  return builder.build();
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::kNormal:
      return "Normal";
    case Category::kDoS:
      return "DoS";
    case Category::kProbe:
      return "Probe";
    case Category::kUnauthorizedAccess:
      return "UnauthorizedAccess";
  }
  return "?";
}

std::vector<std::string> category_names() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    out.emplace_back(category_name(static_cast<Category>(i)));
  }
  return out;
}

std::optional<Category> LabelTaxonomy::find(std::string_view label) const {
  auto it = mapping_.find(label);
  if (it == mapping_.end()) return std::nullopt;
  return it->second;
}

Category LabelTaxonomy::at(std::string_view label) const {
  if (auto c = find(label)) return *c;
  throw UnknownLabel(std::string(label));
}

LabelTaxonomy default_taxonomy() {
  LabelTaxonomy::Map m;
  m["normal"] = Category::kNormal;
  for (const char* l : {"back", "land", "neptune", "pod", "smurf", "teardrop", "apache2",
                        "udpstorm", "processtable", "worm"}) {
    m[l] = Category::kDoS;
  }
  for (const char* l : {"satan", "ipsweep", "nmap", "portsweep", "mscan", "saint"}) {
    m[l] = Category::kProbe;
  }
  for (const char* l :
       {"guess_passwd", "ftp_write", "imap",          "phf",        "multihop",   "warezmaster",
        "warezclient",  "spy",       "xlock",         "xsnoop",     "snmpguess",  "snmpgetattack",
        "httptunnel",   "sendmail",  "named",         "mailbomb",   "buffer_overflow",
        "loadmodule",   "rootkit",   "perl",          "sqlattack",  "xterm",      "ps"}) {
    m[l] = Category::kUnauthorizedAccess;
  }
  return LabelTaxonomy(std::move(m));
}

std::uint64_t CategoryCounts::total() const {
  std::uint64_t sum = 0;
  for (auto c : counts) sum += c;
  return sum;
}

CategoryCounts coarse_counts(std::span<const RawRecord> records, const LabelTaxonomy& taxonomy) {
  CategoryCounts out;
  for (const auto& r : records) ++out[taxonomy.at(r.label)];
  return out;
}

CategoryCounts coarse_counts(const std::map<std::string, std::uint64_t>& label_counts,
                             const LabelTaxonomy& taxonomy) {
  CategoryCounts out;
  for (const auto& [label, n] : label_counts) out[taxonomy.at(label)] += n;
  return out;
}

void write_counts_csv(std::ostream& out, const CategoryCounts& counts) {
  out << "category,count\n";
  for (Category c : {Category::kDoS, Category::kNormal, Category::kProbe,
                     Category::kUnauthorizedAccess}) {
    out << category_name(c) << ',' << counts[c] << '\n';
  }
}

}  // namespace zdids
