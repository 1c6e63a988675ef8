#include "nefqvf/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "nefqvf/errors.hpp"

namespace nefqvf {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

double parse_plain(const std::string& text, bool& ok) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  ok = ec == std::errc() && ptr == last;
  return v;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& tok : split_values(text)) out.push_back(parse_number(tok, what));
  return out;
}

}  // namespace

double parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  bool ok = false;
  const auto slash = t.find('/');
  double v;
  if (slash == std::string::npos) {
    v = parse_plain(t, ok);
  } else {
    bool ok_num = false, ok_den = false;
    const double num = parse_plain(t.substr(0, slash), ok_num);
    const double den = parse_plain(t.substr(slash + 1), ok_den);
    ok = ok_num && ok_den && den != 0.0;
    v = ok ? num / den : 0.0;
  }
  if (!ok || !std::isfinite(v)) throw ConfigError(what + ": expected a number, got '" + t + "'");
  return v;
}

KinSpikedModel ModelSpec::kin() const {
  if (kind != SpikeKind::kKin) throw ConfigError("kind: this operation needs a kin model");
  KinSpikedModel m{family, null_means, prior};
  m.validate();
  return m;
}

AdditiveSpikedModel ModelSpec::additive() const {
  if (kind != SpikeKind::kAdditive) throw ConfigError("kind: this operation needs an additive model");
  AdditiveSpikedModel m{family, null_means, prior};
  m.validate();
  return m;
}

ModelSpec parse_model(std::istream& in, const std::string& source) {
  ModelSpec spec;
  spec.source = source;
  std::set<std::string> seen;
  std::vector<SpikeAtom> atoms;
  std::string sampler_text;
  long declared_n = -1;
  bool have_family = false;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    const auto eq = line.find('=');
    // family tags contain '=' inside braces; the key is everything before the first '='.
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key != "atom" && !seen.insert(key).second)
      throw ConfigError(where + ": key '" + key + "' given twice");
    try {
      if (key == "family") {
        spec.family = parse_family_tag(value);
        have_family = true;
      } else if (key == "kind") {
        if (value == "kin") spec.kind = SpikeKind::kKin;
        else if (value == "additive") spec.kind = SpikeKind::kAdditive;
        else throw ConfigError("kind: expected kin or additive, got '" + value + "'");
      } else if (key == "null_means") {
        spec.null_means = parse_numbers(value, "null_means");
      } else if (key == "N") {
        const double n = parse_number(value, "N");
        if (n < 1 || n != std::floor(n)) throw ConfigError("N: expected a positive integer");
        declared_n = static_cast<long>(n);
      } else if (key == "atom") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) throw ConfigError("atom: expected 'probability : coordinates'");
        SpikeAtom atom;
        atom.probability = parse_number(value.substr(0, colon), "atom");
        atom.x = parse_numbers(value.substr(colon + 1), "atom");
        atoms.push_back(std::move(atom));
      } else if (key == "sampler") {
        sampler_text = value;
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + ": " + e.what());
    } catch (const DomainError& e) {
      throw ConfigError(where + ": " + key + ": " + e.what());
    }
  }

  if (!have_family) throw ConfigError(source + ": missing key 'family'");
  if (spec.null_means.empty()) throw ConfigError(source + ": missing key 'null_means'");
  if (declared_n > 0) {
    if (spec.null_means.size() == 1)
      spec.null_means.assign(static_cast<std::size_t>(declared_n), spec.null_means.front());
    else if (spec.null_means.size() != static_cast<std::size_t>(declared_n))
      throw ConfigError(source + ": null_means has " + std::to_string(spec.null_means.size()) +
                        " values but N = " + std::to_string(declared_n));
  }
  const std::size_t N = spec.null_means.size();
  if (!atoms.empty() && !sampler_text.empty())
    throw ConfigError(source + ": key 'sampler' cannot be combined with 'atom'");
  try {
    if (!atoms.empty()) {
      for (const auto& a : atoms)
        if (a.x.size() != N)
          throw ConfigError("atom: expected " + std::to_string(N) + " coordinates, got " +
                            std::to_string(a.x.size()));
      spec.prior = SpikePrior::from_atoms(spec.kind, std::move(atoms));
    } else if (!sampler_text.empty()) {
      const auto parts = split_values(sampler_text);
      if (parts.empty()) throw ConfigError("sampler: empty value");
      const std::string name = parts[0];
      std::vector<double> args;
      for (std::size_t i = 1; i < parts.size(); ++i) args.push_back(parse_number(parts[i], "sampler"));
      if (name == "iid-uniform") {
        if (args.size() != 2 || !(args[0] < args[1]))
          throw ConfigError("sampler: iid-uniform needs LO < HI");
        const double lo = args[0], hi = args[1];
        spec.prior = SpikePrior::from_sampler(
            spec.kind, N,
            [lo, hi](Rng& rng, std::vector<double>& out) {
              for (auto& v : out) v = lo + (hi - lo) * open_unit(rng);
            },
            sampler_text);
      } else if (name == "iid-two-point") {
        if (args.size() != 3 || !(args[2] >= 0.0 && args[2] <= 1.0))
          throw ConfigError("sampler: iid-two-point needs A B P with P in [0, 1]");
        const double a = args[0], b = args[1], p = args[2];
        spec.prior = SpikePrior::from_sampler(
            spec.kind, N,
            [a, b, p](Rng& rng, std::vector<double>& out) {
              for (auto& v : out) v = open_unit(rng) < p ? a : b;
            },
            sampler_text);
      } else {
        throw ConfigError("sampler: unknown sampler '" + name + "'");
      }
    } else {
      throw ConfigError("missing key 'atom' or 'sampler'");
    }
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(source + ": atom: " + e.what());
  }
  return spec;
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("model: cannot open '" + path + "'");
  return parse_model(in, path);
}

std::string format_model(const ModelSpec& model) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "family = " << model.family.tag() << "\n";
  os << "kind = " << (model.kind == SpikeKind::kKin ? "kin" : "additive") << "\n";
  os << "null_means =";
  for (double mu : model.null_means) os << ' ' << mu;
  os << "\n";
  for (const auto& a : model.prior.atoms()) {
    os << "atom = " << a.probability << " :";
    for (double x : a.x) os << ' ' << x;
    os << "\n";
  }
  return os.str();
}

}  // namespace nefqvf
