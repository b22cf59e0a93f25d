#include "rvg/sample_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "rvg/error.hpp"

namespace rvg {
namespace {

using nlohmann::ordered_json;

ordered_json box_json(const Box& b) { return ordered_json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from(const ordered_json& j, std::size_t line) {
  if (!j.is_array() || j.size() != 4) throw ParseError(line, "box must be [x1,y1,x2,y2]");
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!is_valid(b)) throw ParseError(line, "invalid box");
  return b;
}

FeatureVector vector_from(const ordered_json& j, std::size_t line, const char* what) {
  if (!j.is_array()) throw ParseError(line, std::string(what) + " must be an array");
  FeatureVector v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw ParseError(line, std::string(what) + ": non-numeric entry");
    v.push_back(x.get<double>());
    if (!std::isfinite(v.back())) throw ParseError(line, std::string(what) + ": non-finite entry");
  }
  return v;
}

}  // namespace

void write_samples(std::ostream& os, std::span<const SampleRecord> records) {
  for (const SampleRecord& r : records) {
    ordered_json j;
    j["id"] = r.id;
    j["query"] = r.sample.query;
    j["gt"] = ordered_json::array();
    for (const Box& b : r.sample.gt_boxes) j["gt"].push_back(box_json(b));
    j["proposals"] = ordered_json::array();
    for (const ProposalCandidate& p : r.sample.proposals) {
      ordered_json pj;
      pj["box"] = box_json(p.scored_box.box);
      pj["score"] = p.scored_box.score;
      pj["g"] = p.g_vec;
      pj["tokens"] = p.roi_tokens;
      j["proposals"].push_back(std::move(pj));
    }
    os << j.dump() << '\n';
  }
}

std::vector<SampleRecord> read_samples(std::istream& is) {
  std::vector<SampleRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = ordered_json::parse(line);
      SampleRecord r;
      r.id = j.value("id", std::string("sample") + std::to_string(out.size()));
      r.sample.query = vector_from(j.at("query"), line_no, "query");
      for (const auto& b : j.at("gt")) r.sample.gt_boxes.push_back(box_from(b, line_no));
      for (const auto& pj : j.at("proposals")) {
        ProposalCandidate p;
        p.scored_box.box = box_from(pj.at("box"), line_no);
        p.scored_box.score = pj.at("score").get<double>();
        p.g_vec = vector_from(pj.at("g"), line_no, "g");
        for (const auto& t : pj.at("tokens")) p.roi_tokens.push_back(vector_from(t, line_no, "token"));
        r.sample.proposals.push_back(std::move(p));
      }
      out.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line_no, std::string("samples: ") + e.what());
    }
  }
  return out;
}

void write_samples_file(const std::string& path, std::span<const SampleRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_samples(os, records);
}

std::vector<SampleRecord> read_samples_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_samples(is);
}

void write_decisions(std::ostream& os, const std::string& id, std::span<const FilterDecision> decisions) {
  ordered_json j;
  j["id"] = id;
  j["decisions"] = ordered_json::array();
  for (const FilterDecision& d : decisions) {
    ordered_json dj;
    dj["index"] = d.index;
    dj["s_lang"] = d.s_lang;
    dj["s_final"] = d.s_final;
    dj["box"] = box_json(d.refined_box);
    dj["selected"] = d.selected;
    j["decisions"].push_back(std::move(dj));
  }
  os << j.dump() << '\n';
}

}  // namespace rvg
