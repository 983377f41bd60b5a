// Cascade text parsing and canonical serialization.

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "drowsegate/face_haar.hpp"

namespace drowsegate {
namespace {

namespace pt = boost::property_tree;

[[noreturn]] void parse_error(const std::string& what) { fail(ErrorCode::ParseError, "cascade: " + what); }
[[noreturn]] void unsupported(const std::string& what) { fail(ErrorCode::UnsupportedCascade, "cascade: " + what); }

bool is_markup_meta(const std::string& key) { return key == "<xmlattr>" || key == "<xmlcomment>"; }

// Element children only, in document order.
std::vector<const pt::ptree*> elements(const pt::ptree& node, const std::string& name = "_") {
  std::vector<const pt::ptree*> out;
  for (const auto& [key, child] : node) {
    if (key == name) out.push_back(&child);
  }
  return out;
}

const pt::ptree& child(const pt::ptree& node, const std::string& name, const std::string& where) {
  const auto found = node.get_child_optional(name);
  if (!found) parse_error("missing <" + name + "> in " + where);
  return *found;
}

std::vector<double> numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p < end) {
    while (p < end && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (p == end) break;
    double v = 0.0;
    const auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc() || (next < end && !std::isspace(static_cast<unsigned char>(*next)))) {
      parse_error("bad number in " + where + ": '" + text + "'");
    }
    out.push_back(v);
    p = next;
  }
  return out;
}

double number(const pt::ptree& node, const std::string& name, const std::string& where) {
  const auto v = numbers(child(node, name, where).data(), where + "/" + name);
  if (v.size() != 1) parse_error("expected one number in " + where + "/" + name);
  return v.front();
}

int integer(double v, const std::string& where) {
  if (v != std::floor(v)) parse_error("expected an integer in " + where);
  return static_cast<int>(v);
}

HaarFeature parse_rects(const pt::ptree& feature, const CascadeModel& model, const std::string& where) {
  if (const auto tilted = feature.get_optional<std::string>("tilted")) {
    const auto t = numbers(*tilted, where + "/tilted");
    if (!t.empty() && t.front() != 0.0) unsupported("tilted features are not supported (" + where + ")");
  }
  HaarFeature f;
  for (const pt::ptree* r : elements(child(feature, "rects", where))) {
    const auto v = numbers(r->data(), where + "/rects");
    if (v.size() != 5) parse_error("rect needs 'x y w h weight' in " + where);
    WeightedRect wr{{integer(v[0], where), integer(v[1], where), integer(v[2], where), integer(v[3], where)}, v[4]};
    if (!fits_within(wr.rect, model.base_width, model.base_height)) {
      parse_error("rect exceeds the " + std::to_string(model.base_width) + "x" +
                  std::to_string(model.base_height) + " base window in " + where);
    }
    f.rects.push_back(wr);
  }
  if (f.rects.empty() || f.rects.size() > 3) parse_error("feature must have 1 to 3 rects in " + where);
  return f;
}

CascadeModel parse_classic(const pt::ptree& root) {
  CascadeModel model;
  const auto size = numbers(child(root, "size", "cascade").data(), "size");
  if (size.size() != 2) parse_error("<size> must hold 'width height'");
  model.base_width = integer(size[0], "size");
  model.base_height = integer(size[1], "size");
  if (model.base_width < 1 || model.base_height < 1) parse_error("non-positive base window");

  int si = 0;
  for (const pt::ptree* stage : elements(child(root, "stages", "cascade"))) {
    const std::string swhere = "stage " + std::to_string(si);
    CascadeStage cs;
    cs.stage_threshold = number(*stage, "stage_threshold", swhere);
    int ti = 0;
    for (const pt::ptree* tree : elements(child(*stage, "trees", swhere))) {
      const std::string twhere = swhere + " tree " + std::to_string(ti++);
      const auto nodes = elements(*tree);
      if (nodes.size() != 1) unsupported("only single-node (stump) trees are supported; " + twhere);
      const pt::ptree& node = *nodes.front();
      if (node.get_child_optional("left_node") || node.get_child_optional("right_node")) {
        unsupported("only single-node (stump) trees are supported; " + twhere);
      }
      WeakClassifier wc;
      wc.feature = parse_rects(child(node, "feature", twhere), model, twhere);
      wc.node_threshold = number(node, "threshold", twhere);
      wc.left_value = number(node, "left_val", twhere);
      wc.right_value = number(node, "right_val", twhere);
      cs.weak.push_back(std::move(wc));
    }
    if (cs.weak.empty()) parse_error(swhere + " has no weak classifiers");
    model.stages.push_back(std::move(cs));
    ++si;
  }
  if (model.stages.empty()) parse_error("no stages");
  return model;
}

CascadeModel parse_boost_layout(const pt::ptree& root) {
  if (root.get<std::string>("stageType", "") != "BOOST") unsupported("stageType must be BOOST");
  if (root.get<std::string>("featureType", "") != "HAAR") unsupported("featureType must be HAAR");

  CascadeModel model;
  model.base_width = integer(number(root, "width", "cascade"), "width");
  model.base_height = integer(number(root, "height", "cascade"), "height");
  if (model.base_width < 1 || model.base_height < 1) parse_error("non-positive base window");

  std::vector<HaarFeature> features;
  int fi = 0;
  for (const pt::ptree* f : elements(child(root, "features", "cascade"))) {
    features.push_back(parse_rects(*f, model, "feature " + std::to_string(fi++)));
  }

  int si = 0;
  for (const pt::ptree* stage : elements(child(root, "stages", "cascade"))) {
    const std::string swhere = "stage " + std::to_string(si);
    CascadeStage cs;
    cs.stage_threshold = number(*stage, "stageThreshold", swhere);
    int wi = 0;
    for (const pt::ptree* weak : elements(child(*stage, "weakClassifiers", swhere))) {
      const std::string wwhere = swhere + " classifier " + std::to_string(wi++);
      const auto internal = numbers(child(*weak, "internalNodes", wwhere).data(), wwhere);
      const auto leaves = numbers(child(*weak, "leafValues", wwhere).data(), wwhere);
      if (internal.size() != 4 || leaves.size() != 2) {
        unsupported("only single-node (stump) trees are supported; " + wwhere);
      }
      const int idx = integer(internal[2], wwhere);
      if (idx < 0 || idx >= static_cast<int>(features.size())) parse_error("feature index out of range in " + wwhere);
      cs.weak.push_back({features[idx], internal[3], leaves[0], leaves[1]});
    }
    if (cs.weak.empty()) parse_error(swhere + " has no weak classifiers");
    model.stages.push_back(std::move(cs));
    ++si;
  }
  if (model.stages.empty()) parse_error("no stages");
  return model;
}

std::string fmt_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

CascadeModel parse_cascade(std::string_view text) {
  pt::ptree doc;
  try {
    std::istringstream in{std::string(text)};
    pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    parse_error("malformed markup at line " + std::to_string(e.line()) + ": " + e.message());
  }

  const auto storage = doc.get_child_optional("opencv_storage");
  if (!storage) parse_error("missing <opencv_storage> root");

  for (const auto& [key, root] : *storage) {
    if (is_markup_meta(key)) continue;
    if (key == "cascade") return parse_boost_layout(root);
    return parse_classic(root);
  }
  parse_error("empty <opencv_storage>");
}

CascadeModel load_cascade(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open cascade file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_cascade(text.str());
}

std::string serialize_cascade(const CascadeModel& model) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\"?>\n<opencv_storage>\n"
      << "<cascade_model type_id=\"opencv-haar-classifier\">\n"
      << "  <size>" << model.base_width << ' ' << model.base_height << "</size>\n"
      << "  <stages>\n";
  for (std::size_t si = 0; si < model.stages.size(); ++si) {
    const CascadeStage& stage = model.stages[si];
    out << "    <_>\n      <trees>\n";
    for (const WeakClassifier& wc : stage.weak) {
      out << "        <_>\n          <_>\n            <feature>\n              <rects>\n";
      for (const WeightedRect& r : wc.feature.rects) {
        out << "                <_>" << r.rect.x << ' ' << r.rect.y << ' ' << r.rect.w << ' ' << r.rect.h << ' '
            << fmt_number(r.weight) << "</_>\n";
      }
      out << "              </rects>\n              <tilted>0</tilted>\n            </feature>\n"
          << "            <threshold>" << fmt_number(wc.node_threshold) << "</threshold>\n"
          << "            <left_val>" << fmt_number(wc.left_value) << "</left_val>\n"
          << "            <right_val>" << fmt_number(wc.right_value) << "</right_val>\n"
          << "          </_>\n        </_>\n";
    }
    out << "      </trees>\n"
        << "      <stage_threshold>" << fmt_number(stage.stage_threshold) << "</stage_threshold>\n"
        << "      <parent>" << static_cast<long>(si) - 1 << "</parent>\n"
        << "      <next>-1</next>\n    </_>\n";
  }
  out << "  </stages>\n</cascade_model>\n</opencv_storage>\n";
  return out.str();
}

}  // namespace drowsegate
