// Copyright 2026 The obm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "obm_tools/archive.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "obm/error.hpp"

namespace obm::tools {

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

namespace {

constexpr const char* kMagic = "OBMARCHIVE";

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void i32(std::int32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(double));
  }
  void i64s(const std::vector<std::int64_t>& v) {
    u64(v.size());
    raw(v.data(), v.size() * sizeof(std::int64_t));
  }
  void bytes(const std::vector<std::uint8_t>& v) {
    u64(v.size());
    raw(v.data(), v.size());
  }
  const std::string& data() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return pod<std::uint32_t>(); }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  std::int32_t i32() { return pod<std::int32_t>(); }
  double f64() { return pod<double>(); }
  std::string str() {
    const auto n = count(1);
    return std::string(take(n));
  }
  std::vector<double> f64s() { return array<double>(); }
  std::vector<std::int64_t> i64s() { return array<std::int64_t>(); }
  std::vector<std::uint8_t> bytes() { return array<std::uint8_t>(); }
  std::string_view slice(std::size_t n) { return take(n); }
  bool done() const { return pos_ == data_.size(); }

 private:
  template <class T>
  T pod() {
    T v;
    std::memcpy(&v, take(sizeof v).data(), sizeof v);
    return v;
  }
  template <class T>
  std::vector<T> array() {
    const auto n = count(sizeof(T));
    std::vector<T> v(n);
    if (n != 0) std::memcpy(v.data(), take(n * sizeof(T)).data(), n * sizeof(T));
    return v;
  }
  // Element count whose payload must fit in the remaining data.
  std::size_t count(std::size_t element) {
    const std::uint64_t n = u64();
    if (n > (data_.size() - pos_) / element) throw Error(ErrorCode::kTruncated, "archive length field runs past the end");
    return static_cast<std::size_t>(n);
  }
  std::string_view take(std::size_t n) {
    if (n > data_.size() - pos_) throw Error(ErrorCode::kTruncated, "archive ends inside a section");
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

void write_params(Writer& w, const BmParams& p) {
  w.i32(p.hidden);
  w.i32(p.unary);
  w.i32(p.pairwise);
  w.i32(p.members);
  w.f64s(p.alpha);
  w.f64s(p.beta);
  w.f64s(p.gamma);
  w.f64s(p.lambda);
  w.u64(p.pairs.size());
  for (const auto& [a, b] : p.pairs.pairs()) {
    w.i32(a);
    w.i32(b);
  }
  w.bytes(p.observed);
}

BmParams read_params(Reader& r) {
  BmParams p;
  p.hidden = r.i32();
  p.unary = r.i32();
  p.pairwise = r.i32();
  p.members = r.i32();
  p.alpha = r.f64s();
  p.beta = r.f64s();
  p.gamma = r.f64s();
  p.lambda = r.f64s();
  const std::uint64_t n_pairs = r.u64();
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (std::uint64_t k = 0; k < n_pairs; ++k) {
    const std::int32_t a = r.i32();
    const std::int32_t b = r.i32();
    pairs.emplace_back(a, b);
  }
  p.pairs = PairSet::from_pairs(p.members, std::move(pairs));
  p.observed = r.bytes();
  const auto m = static_cast<std::size_t>(p.members);
  const auto d = static_cast<std::size_t>(p.hidden);
  const auto a = static_cast<std::size_t>(p.unary);
  if (p.members < 0 || p.hidden < 0 || p.alpha.size() != d || p.beta.size() != m * a ||
      p.gamma.size() != m * d * a || p.lambda.size() != p.pairs.size() * static_cast<std::size_t>(p.pairwise) ||
      p.observed.size() != m) {
    throw Error(ErrorCode::kShape, "archive parameter block has inconsistent sizes");
  }
  return p;
}

void write_svd(Writer& w, const SvdFactors& f) {
  w.i32(f.rank);
  w.i32(f.n_users);
  w.i32(f.n_items);
  w.f64(f.global_mean);
  w.f64(f.min_label);
  w.f64(f.max_label);
  w.f64s(f.user_factors);
  w.f64s(f.item_factors);
  w.bytes(f.user_seen);
  w.bytes(f.item_seen);
}

SvdFactors read_svd(Reader& r) {
  SvdFactors f;
  f.rank = r.i32();
  f.n_users = r.i32();
  f.n_items = r.i32();
  f.global_mean = r.f64();
  f.min_label = r.f64();
  f.max_label = r.f64();
  f.user_factors = r.f64s();
  f.item_factors = r.f64s();
  f.user_seen = r.bytes();
  f.item_seen = r.bytes();
  if (f.rank < 1 || f.user_factors.size() != static_cast<std::size_t>(f.n_users) * static_cast<std::size_t>(f.rank) ||
      f.item_factors.size() != static_cast<std::size_t>(f.n_items) * static_cast<std::size_t>(f.rank)) {
    throw Error(ErrorCode::kShape, "archive svd block has inconsistent sizes");
  }
  return f;
}

void section(std::ostream& out, const std::string& name, const Writer& body) {
  Writer head;
  head.str(name);
  head.u64(body.data().size());
  out.write(head.data().data(), static_cast<std::streamsize>(head.data().size()));
  out.write(body.data().data(), static_cast<std::streamsize>(body.data().size()));
}

}  // namespace

FeatureScheme ModelArchive::feature_scheme() const { return make_scheme(scheme, scale, normalizer); }

void write_archive(const ModelArchive& archive, std::ostream& out) {
  out << kMagic << ' ' << archive.version << '\n';

  Writer meta;
  meta.str(archive.variant);
  meta.str(std::string(scheme_name(archive.scheme)));
  meta.u8(archive.normalizer ? 1 : 0);
  meta.f64(archive.normalizer ? archive.normalizer->mean : 0.0);
  meta.f64(archive.normalizer ? archive.normalizer->std : 1.0);
  meta.f64s(archive.scale.values());
  meta.u64(archive.dataset_hash);
  meta.i32(archive.k_top);
  meta.i32(archive.min_overlap);
  section(out, "meta", meta);

  Writer ids;
  ids.i64s(archive.users.ids());
  ids.i64s(archive.items.ids());
  section(out, "ids", ids);

  if (archive.user_side) {
    Writer w;
    write_params(w, *archive.user_side);
    section(out, "user_side", w);
  }
  if (archive.item_side) {
    Writer w;
    write_params(w, *archive.item_side);
    section(out, "item_side", w);
  }
  if (archive.svd) {
    Writer w;
    write_svd(w, *archive.svd);
    section(out, "svd", w);
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing archive");
}

ModelArchive read_archive(std::istream& in, int reader_version) {
  std::string magic;
  int version = -1;
  if (!(in >> magic >> version) || magic != kMagic) throw Error(ErrorCode::kParse, "not a model archive");
  if (in.get() != '\n') throw Error(ErrorCode::kParse, "malformed archive header");
  if (version != reader_version) {
    throw Error(ErrorCode::kVersion, "archive version " + std::to_string(version) + " is not supported (reader " +
                                         std::to_string(reader_version) + ")");
  }
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(data);

  ModelArchive a;
  a.version = version;
  bool have_meta = false;
  bool have_ids = false;
  while (!r.done()) {
    const std::string name = r.str();
    const std::uint64_t length = r.u64();
    if (length > data.size()) throw Error(ErrorCode::kTruncated, "section '" + name + "' runs past the end");
    Reader s(r.slice(static_cast<std::size_t>(length)));
    if (name == "meta") {
      a.variant = s.str();
      a.scheme = parse_scheme_kind(s.str());
      const bool has_norm = s.u8() != 0;
      GaussianNormalizer norm;
      norm.mean = s.f64();
      norm.std = s.f64();
      if (has_norm) a.normalizer = norm;
      a.scale = RatingScale(s.f64s());
      a.dataset_hash = s.u64();
      a.k_top = s.i32();
      a.min_overlap = s.i32();
      have_meta = true;
    } else if (name == "ids") {
      a.users = IdMap(s.i64s());
      a.items = IdMap(s.i64s());
      have_ids = true;
    } else if (name == "user_side") {
      a.user_side = read_params(s);
    } else if (name == "item_side") {
      a.item_side = read_params(s);
    } else if (name == "svd") {
      a.svd = read_svd(s);
    } else {
      throw Error(ErrorCode::kParse, "unknown archive section '" + name + "'");
    }
    if (!s.done()) throw Error(ErrorCode::kParse, "trailing bytes in archive section '" + name + "'");
  }
  if (!have_meta || !have_ids) throw Error(ErrorCode::kTruncated, "archive is missing required sections");
  return a;
}

void save_model(const ModelArchive& archive, const std::string& path) {
  // Write to a sibling file and rename so readers never see a partial archive.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    write_archive(archive, out);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(ErrorCode::kIo, "cannot move archive to " + path);
}

ModelArchive load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return read_archive(in);
}

}  // namespace obm::tools
