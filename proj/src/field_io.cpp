#include "layertess/error.hpp"
#include "layertess/field.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <sstream>

namespace layertess {

using nlohmann::json;

void write_field_snapshot(std::ostream& os, const LayeredField& field, const CouplingParams& params,
                          const std::string& extra_header_json)
{
  json header = json::parse(extra_header_json);
  header["format"] = "layertess-field";
  header["seeds"] = field.seeds;
  header["step_count"] = field.step_count;
  header["params"] = {{"w", params.w},   {"a", params.a},   {"e", params.e},
                      {"e_base", params.e_base}, {"mu", params.mu}, {"dt", params.dt}};
  os << "# " << header.dump() << '\n';
  write_triplets(os, field.phi);
}

LayeredField read_field_snapshot(std::istream& is, CouplingParams* params, std::string* header_json)
{
  std::string first;
  if (!std::getline(is, first) || first.empty() || first[0] != '#')
    throw Error("parse", "field snapshot lacks its header line");
  json header;
  try {
    header = json::parse(first.substr(1));
  } catch (const json::exception& ex) {
    throw Error("parse", std::string("bad snapshot header: ") + ex.what());
  }
  if (header.value("format", "") != "layertess-field")
    throw Error("parse", "not a layertess field snapshot");

  if (header_json)
    *header_json = header.dump();

  LayeredField field;
  field.phi = read_triplets(is);
  field.seeds = header.at("seeds").get<std::vector<Index>>();
  field.step_count = header.value("step_count", std::size_t{0});
  if (field.phi.n_rows != static_cast<Index>(field.seeds.size()) + 1)
    throw Error("parse", "snapshot row count does not match its seed list");
  if (params && header.contains("params")) {
    const json& p = header["params"];
    params->w = p.value("w", params->w);
    params->a = p.value("a", params->a);
    params->e = p.value("e", params->e);
    params->e_base = p.value("e_base", params->e_base);
    params->mu = p.value("mu", params->mu);
    params->dt = p.value("dt", params->dt);
  }
  return field;
}

void write_labels_csv(std::ostream& os, std::span<const Index> labels, const std::string& comment)
{
  if (!comment.empty())
    os << "# " << comment << '\n';
  os << "vertex_id,label\n";
  for (std::size_t v = 0; v < labels.size(); ++v)
    os << v << ',' << labels[v] << '\n';
}

} // namespace layertess
