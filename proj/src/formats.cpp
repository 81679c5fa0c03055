#include "optex/formats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace optex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_number(double v, int precision) {
  if (v == 0.0) return "0";  // normalize negative zero
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

void validate_names(const MilpModel& model) {
  std::unordered_set<std::string> seen;
  for (const std::string& name : model.var_names) {
    if (name.empty() || name.size() > 255) {
      throw NameCollision("variable names must be nonempty and at most 255 characters");
    }
    if (!seen.insert(name).second) {
      throw NameCollision("duplicate variable name '" + name + "'");
    }
  }
}

void require_objective(const MilpModel& model) {
  for (const auto& [var, val] : model.objective) {
    if (val != 0.0) return;
  }
  throw MissingObjective("model has an empty objective");
}

std::vector<std::pair<int, double>> sorted_objective(const MilpModel& model) {
  std::map<int, double> acc;
  for (const auto& [var, val] : model.objective) acc[var] += val;
  return {acc.begin(), acc.end()};
}

// ---------------------------------------------------------------- LP writer

void write_expr(std::ostream& out, const std::vector<std::pair<int, double>>& terms,
                const MilpModel& model, int precision) {
  bool first = true;
  for (const auto& [var, val] : terms) {
    if (val == 0.0) continue;
    if (first) {
      if (val < 0.0) out << "- ";
      first = false;
    } else {
      out << (val < 0.0 ? " - " : " + ");
    }
    const double mag = std::abs(val);
    if (mag != 1.0) out << format_number(mag, precision) << ' ';
    out << model.var_names[var];
  }
  if (first) out << "0 " << model.var_names[0];
}

void write_lp(const MilpModel& model, const ExportOptions& options, std::ostream& out) {
  const int p = options.precision;
  out << "Minimize\n obj: ";
  write_expr(out, sorted_objective(model), model, p);
  out << "\nSubject To\n";
  auto write_rows = [&](const SparseRows& rows, const char* prefix, const char* rel) {
    for (int r = 0; r < rows.count(); ++r) {
      out << ' ' << prefix << (r + 1) << ": ";
      write_expr(out, rows.entries[r], model, p);
      out << ' ' << rel << ' ' << format_number(rows.rhs[r], p) << '\n';
    }
  };
  write_rows(model.eq, "eq", "=");
  write_rows(model.ge, "ge", ">=");
  write_rows(model.le, "le", "<=");
  out << "Bounds\n";
  for (int v = 0; v < model.num_vars; ++v) {
    const double lo = model.var_lower[v], hi = model.var_upper[v];
    out << ' ';
    if (lo == hi) {
      out << model.var_names[v] << " = " << format_number(lo, p);
    } else if (lo == -kInf && hi == kInf) {
      out << model.var_names[v] << " free";
    } else if (lo == -kInf) {
      out << model.var_names[v] << " <= " << format_number(hi, p);
    } else if (hi == kInf) {
      out << model.var_names[v] << " >= " << format_number(lo, p);
    } else {
      out << format_number(lo, p) << " <= " << model.var_names[v] << " <= "
          << format_number(hi, p);
    }
    out << '\n';
  }
  bool any_int = false;
  for (int v = 0; v < model.num_vars; ++v) {
    if (model.integrality[v]) {
      any_int = true;
      break;
    }
  }
  if (any_int) {
    out << "Binaries\n";
    for (int v = 0; v < model.num_vars; ++v) {
      if (model.integrality[v]) out << ' ' << model.var_names[v] << '\n';
    }
  }
  out << "End\n";
}

// --------------------------------------------------------------- MPS writer

void write_mps(const MilpModel& model, const ExportOptions& options, std::ostream& out) {
  const int p = options.precision;
  out << "NAME optex\nROWS\n N obj\n";
  for (int r = 0; r < model.eq.count(); ++r) out << " E eq" << (r + 1) << '\n';
  for (int r = 0; r < model.ge.count(); ++r) out << " G ge" << (r + 1) << '\n';
  for (int r = 0; r < model.le.count(); ++r) out << " L le" << (r + 1) << '\n';

  // Column-major view of the row entries.
  std::vector<std::vector<std::pair<std::string, double>>> columns(model.num_vars);
  for (const auto& [var, val] : sorted_objective(model)) {
    if (val != 0.0) columns[var].emplace_back("obj", val);
  }
  auto scatter = [&](const SparseRows& rows, const char* prefix) {
    for (int r = 0; r < rows.count(); ++r) {
      for (const auto& [var, val] : rows.entries[r]) {
        columns[var].emplace_back(prefix + std::to_string(r + 1), val);
      }
    }
  };
  scatter(model.eq, "eq");
  scatter(model.ge, "ge");
  scatter(model.le, "le");

  out << "COLUMNS\n";
  bool in_integer_block = false;
  int marker = 0;
  for (int v = 0; v < model.num_vars; ++v) {
    if (model.integrality[v] != in_integer_block) {
      ++marker;
      out << " MARKER" << marker << " 'MARKER' "
          << (model.integrality[v] ? "'INTORG'" : "'INTEND'") << '\n';
      in_integer_block = model.integrality[v];
    }
    for (const auto& [row, val] : columns[v]) {
      out << ' ' << model.var_names[v] << ' ' << row << ' ' << format_number(val, p) << '\n';
    }
  }
  if (in_integer_block) {
    ++marker;
    out << " MARKER" << marker << " 'MARKER' 'INTEND'\n";
  }

  out << "RHS\n";
  auto rhs_rows = [&](const SparseRows& rows, const char* prefix) {
    for (int r = 0; r < rows.count(); ++r) {
      if (rows.rhs[r] != 0.0) {
        out << " RHS " << prefix << (r + 1) << ' ' << format_number(rows.rhs[r], p) << '\n';
      }
    }
  };
  rhs_rows(model.eq, "eq");
  rhs_rows(model.ge, "ge");
  rhs_rows(model.le, "le");

  out << "BOUNDS\n";
  for (int v = 0; v < model.num_vars; ++v) {
    const double lo = model.var_lower[v], hi = model.var_upper[v];
    const std::string& name = model.var_names[v];
    if (lo == hi) {
      out << " FX BND " << name << ' ' << format_number(lo, p) << '\n';
    } else if (lo == -kInf && hi == kInf) {
      out << " FR BND " << name << '\n';
    } else {
      if (lo == -kInf) {
        out << " MI BND " << name << '\n';
      } else {
        out << " LO BND " << name << ' ' << format_number(lo, p) << '\n';
      }
      if (hi != kInf) {
        out << " UP BND " << name << ' ' << format_number(hi, p) << '\n';
      }
    }
  }
  out << "ENDATA\n";
}

// ----------------------------------------------------------------- parsing

struct ParsedRow {
  Sense sense;
  std::vector<std::pair<std::string, double>> terms;
  double rhs;
};

struct ParseState {
  std::vector<std::string> var_order;
  std::unordered_map<std::string, int> var_index;
  std::vector<ParsedRow> rows;  // in encounter order
  std::vector<std::pair<std::string, double>> objective;
  std::unordered_map<std::string, std::pair<double, double>> bounds;
  std::unordered_set<std::string> binaries;
  std::unordered_set<std::string> declared;  // vars seen anywhere

  int intern(const std::string& name) {
    auto it = var_index.find(name);
    if (it != var_index.end()) return it->second;
    const int idx = static_cast<int>(var_order.size());
    var_index.emplace(name, idx);
    var_order.push_back(name);
    return idx;
  }
};

MilpModel assemble(ParseState& st) {
  // Variables referenced in rows but absent from the bounds/columns order
  // are appended at the end.
  for (const auto& [name, val] : st.objective) st.intern(name);
  for (const ParsedRow& row : st.rows) {
    for (const auto& [name, val] : row.terms) st.intern(name);
  }
  MilpModel model;
  model.num_vars = static_cast<int>(st.var_order.size());
  model.var_names = st.var_order;
  model.var_lower.assign(model.num_vars, 0.0);
  model.var_upper.assign(model.num_vars, kInf);
  model.integrality.assign(model.num_vars, false);
  for (int v = 0; v < model.num_vars; ++v) {
    auto it = st.bounds.find(st.var_order[v]);
    if (it != st.bounds.end()) {
      model.var_lower[v] = it->second.first;
      model.var_upper[v] = it->second.second;
    }
  }
  for (const std::string& name : st.binaries) {
    auto it = st.var_index.find(name);
    if (it != st.var_index.end()) model.integrality[it->second] = true;
  }
  for (const auto& [name, val] : st.objective) {
    model.objective.emplace_back(st.var_index.at(name), val);
  }
  std::sort(model.objective.begin(), model.objective.end());
  for (const ParsedRow& row : st.rows) {
    SparseRows& rows =
        row.sense == Sense::EQ ? model.eq : (row.sense == Sense::GE ? model.ge : model.le);
    std::map<int, double> acc;
    for (const auto& [name, val] : row.terms) acc[st.var_index.at(name)] += val;
    rows.entries.emplace_back(acc.begin(), acc.end());
    rows.rhs.push_back(row.rhs);
  }
  return model;
}

bool is_number_token(const std::string& t) {
  if (t.empty()) return false;
  char* end = nullptr;
  std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

// ------------------------------------------------------------------ LP read

struct LpToken {
  std::string text;
  int line;
};

std::vector<LpToken> lp_tokenize(std::istream& in) {
  std::vector<LpToken> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t comment = line.find('\\');
    if (comment != std::string::npos) line.resize(comment);
    std::string cur;
    auto flush = [&] {
      if (!cur.empty()) {
        tokens.push_back({cur, line_no});
        cur.clear();
      }
    };
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (std::isspace(static_cast<unsigned char>(ch))) {
        flush();
      } else if (ch == ':' || ch == '+') {
        flush();
        tokens.push_back({std::string(1, ch), line_no});
      } else if (ch == '-') {
        // Minus binds to an exponent inside a number token, splits otherwise.
        if (!cur.empty() && (cur.back() == 'e' || cur.back() == 'E') &&
            is_number_token(cur + "-1")) {
          cur.push_back(ch);
        } else {
          flush();
          tokens.push_back({std::string(1, ch), line_no});
        }
      } else if (ch == '<' || ch == '>' || ch == '=') {
        if (cur == "<" || cur == ">") {
          cur.push_back(ch);
          flush();
        } else {
          flush();
          cur.push_back(ch);
          if (ch == '=') flush();
        }
      } else {
        cur.push_back(ch);
      }
    }
    flush();
  }
  return tokens;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class LpParser {
 public:
  explicit LpParser(std::istream& in) : tokens_(lp_tokenize(in)) {}

  MilpModel parse() {
    expect_keyword("minimize");
    parse_objective();
    expect_keyword("subject");
    expect_keyword("to");
    parse_rows();
    if (keyword_is("bounds")) {
      next();
      parse_bounds();
    }
    while (keyword_is("binaries") || keyword_is("binary") || keyword_is("general") ||
           keyword_is("generals")) {
      next();
      parse_binaries();
    }
    expect_keyword("end");
    return assemble(st_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) {
    const int line = pos_ < tokens_.size() ? tokens_[pos_].line
                                           : (tokens_.empty() ? 1 : tokens_.back().line);
    throw SyntaxError(what, line);
  }

  bool done() const { return pos_ >= tokens_.size(); }
  const std::string& peek() {
    if (done()) fail("unexpected end of file");
    return tokens_[pos_].text;
  }
  std::string next() {
    if (done()) fail("unexpected end of file");
    return tokens_[pos_++].text;
  }
  bool keyword_is(const std::string& kw) { return !done() && lower(peek()) == kw; }
  void expect_keyword(const std::string& kw) {
    if (done() || lower(next()) != kw) fail("expected keyword '" + kw + "'");
  }

  static bool is_section_keyword(const std::string& t) {
    const std::string k = lower(t);
    return k == "subject" || k == "bounds" || k == "binaries" || k == "binary" ||
           k == "general" || k == "generals" || k == "end" || k == "minimize" || k == "st";
  }

  // Parses "c1 v1 + c2 v2 ..." up to a relation or section keyword.
  std::vector<std::pair<std::string, double>> parse_expr() {
    std::vector<std::pair<std::string, double>> terms;
    double sign = 1.0;
    bool have_sign = false;
    while (!done()) {
      const std::string& t = peek();
      if (t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">") break;
      if (!have_sign && is_section_keyword(t)) break;
      if (t == "+") {
        next();
        have_sign = true;
        continue;
      }
      if (t == "-") {
        next();
        sign = -sign;
        have_sign = true;
        continue;
      }
      double coef = 1.0;
      std::string tok = next();
      if (is_number_token(tok)) {
        coef = std::strtod(tok.c_str(), nullptr);
        if (done()) fail("dangling coefficient");
        tok = next();
        if (is_number_token(tok)) fail("two consecutive numbers in expression");
      }
      terms.emplace_back(tok, sign * coef);
      st_.declared.insert(tok);
      sign = 1.0;
      have_sign = false;
    }
    return terms;
  }

  void parse_objective() {
    // Optional "name:" prefix.
    if (!done() && pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].text == ":") {
      next();
      next();
    }
    st_.objective = parse_expr();
  }

  void parse_rows() {
    while (!done() && !is_section_keyword(peek())) {
      if (pos_ + 1 < tokens_.size() && tokens_[pos_ + 1].text == ":") {
        next();
        next();
      }
      ParsedRow row;
      row.terms = parse_expr();
      if (row.terms.empty()) fail("constraint with no terms");
      const std::string rel = next();
      if (rel == "<=" || rel == "<") {
        row.sense = Sense::LE;
      } else if (rel == ">=" || rel == ">") {
        row.sense = Sense::GE;
      } else if (rel == "=") {
        row.sense = Sense::EQ;
      } else {
        fail("expected a relation, found '" + rel + "'");
      }
      row.rhs = signed_number();
      st_.rows.push_back(std::move(row));
    }
  }

  double signed_number() {
    double sign = 1.0;
    std::string t = next();
    while (t == "-" || t == "+") {
      if (t == "-") sign = -sign;
      t = next();
    }
    if (!is_number_token(t)) fail("expected a number in bounds");
    return sign * std::strtod(t.c_str(), nullptr);
  }

  void parse_bounds() {
    while (!done() && !is_section_keyword(peek())) {
      // Forms: "l <= v <= u", "v <= u", "v >= l", "v = l", "v free".
      if (is_number_token(peek()) || peek() == "-" || peek() == "+") {
        const double lo = signed_number();
        if (next() != "<=") fail("expected '<=' in a two-sided bound");
        const std::string name = next();
        if (next() != "<=") fail("expected '<=' in a two-sided bound");
        const double hi = signed_number();
        set_bound(name, lo, hi);
      } else {
        const std::string name = next();
        const std::string rel = next();
        if (lower(rel) == "free") {
          set_bound(name, -kInf, kInf);
        } else if (rel == "<=") {
          set_bound(name, existing(name).first == 0.0 && existing(name).second == kInf
                              ? -kInf
                              : existing(name).first,
                    signed_number());
        } else if (rel == ">=") {
          set_bound(name, signed_number(), existing(name).second);
        } else if (rel == "=") {
          const double v = signed_number();
          set_bound(name, v, v);
        } else {
          fail("malformed bound line near '" + rel + "'");
        }
      }
    }
  }

  std::pair<double, double> existing(const std::string& name) {
    auto it = st_.bounds.find(name);
    return it == st_.bounds.end() ? std::pair<double, double>{0.0, kInf} : it->second;
  }

  void set_bound(const std::string& name, double lo, double hi) {
    st_.bounds[name] = {lo, hi};
    st_.intern(name);  // bounds section fixes the variable order
    st_.declared.insert(name);
  }

  void parse_binaries() {
    while (!done() && !is_section_keyword(peek())) {
      const std::string name = next();
      st_.binaries.insert(name);
      st_.declared.insert(name);
    }
  }

  std::vector<LpToken> tokens_;
  std::size_t pos_ = 0;
  ParseState st_;
};

// ----------------------------------------------------------------- MPS read

class MpsParser {
 public:
  explicit MpsParser(std::istream& in) : in_(in) {}

  MilpModel parse() {
    std::string section;
    bool integer_block = false;
    bool saw_endata = false;
    std::vector<std::string> f;
    while (read_fields(f)) {
      if (f.empty()) continue;
      const std::string head = f[0];
      if (!started_mid_line_ &&
          (head == "NAME" || head == "ROWS" || head == "COLUMNS" || head == "RHS" ||
           head == "RANGES" || head == "BOUNDS" || head == "ENDATA" || head == "OBJSENSE")) {
        section = head;
        if (head == "ENDATA") {
          saw_endata = true;
          break;
        }
        continue;
      }
      if (section == "ROWS") {
        if (f.size() != 2) fail("ROWS line needs a type and a name");
        const std::string type = f[0];
        if (type == "N") {
          obj_row_ = f[1];
        } else if (type == "E" || type == "G" || type == "L") {
          const Sense sense = type == "E" ? Sense::EQ : (type == "G" ? Sense::GE : Sense::LE);
          row_sense_[f[1]] = sense;
          row_id_[f[1]] = static_cast<int>(st_.rows.size());
          st_.rows.push_back({sense, {}, 0.0});
        } else {
          fail("unknown row type '" + type + "'");
        }
      } else if (section == "COLUMNS") {
        if (f.size() >= 3 && f[1] == "'MARKER'") {
          if (f[2] == "'INTORG'") {
            integer_block = true;
          } else if (f[2] == "'INTEND'") {
            integer_block = false;
          } else {
            fail("unknown marker '" + f[2] + "'");
          }
          continue;
        }
        if (f.size() < 3 || f.size() % 2 == 0) fail("COLUMNS line needs row/value pairs");
        const std::string& var = f[0];
        st_.intern(var);
        st_.declared.insert(var);
        if (integer_block) st_.binaries.insert(var);
        for (std::size_t i = 1; i + 1 < f.size(); i += 2) {
          if (!is_number_token(f[i + 1])) fail("expected a numeric value in COLUMNS");
          const double val = std::strtod(f[i + 1].c_str(), nullptr);
          if (f[i] == obj_row_) {
            st_.objective.emplace_back(var, val);
          } else {
            auto it = row_id_.find(f[i]);
            if (it == row_id_.end()) fail("unknown row '" + f[i] + "' in COLUMNS");
            st_.rows[it->second].terms.emplace_back(var, val);
          }
        }
      } else if (section == "RHS") {
        if (f.size() < 3 || f.size() % 2 == 0) fail("RHS line needs row/value pairs");
        for (std::size_t i = 1; i + 1 < f.size(); i += 2) {
          auto it = row_id_.find(f[i]);
          if (it == row_id_.end()) fail("unknown row '" + f[i] + "' in RHS");
          if (!is_number_token(f[i + 1])) fail("expected a numeric value in RHS");
          st_.rows[it->second].rhs = std::strtod(f[i + 1].c_str(), nullptr);
        }
      } else if (section == "RANGES") {
        fail("ranged rows are not supported");
      } else if (section == "BOUNDS") {
        if (f.size() < 3) fail("BOUNDS line needs a type, a set name and a variable");
        const std::string& type = f[0];
        const std::string& var = f[2];
        auto cur = st_.bounds.count(var) ? st_.bounds[var] : std::pair<double, double>{0.0, kInf};
        auto value = [&]() -> double {
          if (f.size() < 4 || !is_number_token(f[3])) fail("bound needs a numeric value");
          return std::strtod(f[3].c_str(), nullptr);
        };
        if (type == "FX") {
          const double v = value();
          cur = {v, v};
        } else if (type == "FR") {
          cur = {-kInf, kInf};
        } else if (type == "MI") {
          cur.first = -kInf;
        } else if (type == "PL") {
          cur.second = kInf;
        } else if (type == "LO") {
          cur.first = value();
        } else if (type == "UP") {
          cur.second = value();
        } else if (type == "BV") {
          cur = {0.0, 1.0};
          st_.binaries.insert(var);
        } else {
          fail("unknown bound type '" + type + "'");
        }
        st_.bounds[var] = cur;
        st_.intern(var);
        st_.declared.insert(var);
      } else if (section.empty()) {
        fail("content before any section header");
      }
    }
    if (!saw_endata) fail("missing ENDATA");
    return assemble(st_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) { throw SyntaxError(what, line_no_); }

  bool read_fields(std::vector<std::string>& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line[0] == '*') continue;  // comment
      started_mid_line_ = !line.empty() && std::isspace(static_cast<unsigned char>(line[0]));
      out.clear();
      std::istringstream ss(line);
      std::string tok;
      while (ss >> tok) out.push_back(tok);
      if (!out.empty()) return true;
    }
    return false;
  }

  std::istream& in_;
  int line_no_ = 0;
  bool started_mid_line_ = false;
  ParseState st_;
  std::string obj_row_;
  std::unordered_map<std::string, Sense> row_sense_;
  std::unordered_map<std::string, int> row_id_;
};

}  // namespace

void write_model(const MilpModel& model, const ExportOptions& options, std::ostream& sink) {
  if (options.precision < 9) throw SchemaError("export precision must be at least 9 digits");
  validate_names(model);
  require_objective(model);
  if (options.format == ExportFormat::LP) {
    write_lp(model, options, sink);
  } else {
    write_mps(model, options, sink);
  }
}

std::string write_model_string(const MilpModel& model, const ExportOptions& options) {
  std::ostringstream out;
  write_model(model, options, out);
  return out.str();
}

MilpModel parse_model(std::istream& source, ExportFormat format) {
  if (format == ExportFormat::LP) {
    LpParser parser(source);
    return parser.parse();
  }
  MpsParser parser(source);
  return parser.parse();
}

MilpModel parse_model_string(const std::string& text, ExportFormat format) {
  std::istringstream in(text);
  return parse_model(in, format);
}

}  // namespace optex
