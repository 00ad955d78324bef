#include "strhound/sir/text.hpp"

#include <charconv>
#include <set>

#include "strhound/codec/codec.hpp"
#include "strhound/sir/typecheck.hpp"

namespace strhound::sir {

SyntaxError::SyntaxError(int l, int c, const std::string& msg)
    : std::runtime_error(std::to_string(l) + ":" + std::to_string(c) + ": " + msg), line(l), column(c) {}

namespace {

enum class Tok { Ident, Int, Str, Punct, Arrow, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier text, literal bytes, or the punctuation char
  std::int64_t value = 0;
  int line = 1;
  int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '.'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) return t;
    const char c = src_[pos_];
    if (ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < src_.size()) {
        const char d = src_[pos_];
        if (ident_char(d) || (d == '-' && pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))))
          advance();
        else
          break;
      }
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      std::size_t start = pos_;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      auto sv = src_.substr(start, pos_ - start);
      auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), t.value);
      if (ec != std::errc()) throw SyntaxError(t.line, t.col, "integer literal out of range");
      t.kind = Tok::Int;
      return t;
    }
    if (c == '"') {
      advance();
      t.kind = Tok::Str;
      while (true) {
        if (pos_ >= src_.size() || src_[pos_] == '\n') throw SyntaxError(t.line, t.col, "unterminated string literal");
        const char d = src_[pos_];
        if (d == '"') {
          advance();
          break;
        }
        if (d == '\\') {
          advance();
          if (pos_ >= src_.size()) throw SyntaxError(line_, col_, "bad escape");
          const char e = src_[pos_];
          if (e == '"' || e == '\\') {
            t.text += e;
            advance();
          } else if (e == 'x') {
            advance();
            int v = 0;
            for (int k = 0; k < 2; ++k) {
              if (pos_ >= src_.size() || !std::isxdigit(static_cast<unsigned char>(src_[pos_])))
                throw SyntaxError(line_, col_, "bad \\x escape");
              const char h = src_[pos_];
              v = v * 16 + (std::isdigit(static_cast<unsigned char>(h)) ? h - '0' : (std::tolower(h) - 'a' + 10));
              advance();
            }
            t.text += static_cast<char>(v);
          } else {
            throw SyntaxError(line_, col_, std::string("unknown escape \\") + e);
          }
          continue;
        }
        t.text += d;
        advance();
      }
      return t;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      t.kind = Tok::Arrow;
      t.text = "->";
      return t;
    }
    if (std::string_view("{}();:,@[]").find(c) != std::string_view::npos) {
      advance();
      t.kind = Tok::Punct;
      t.text = std::string(1, c);
      return t;
    }
    throw SyntaxError(t.line, t.col, std::string("unexpected character '") + c + "'");
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

std::pair<std::string, std::string> split_qualified(const Token& t) {
  const auto dot = t.text.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == t.text.size())
    throw SyntaxError(t.line, t.col, "expected qualified name Class.member, got '" + t.text + "'");
  return {t.text.substr(0, dot), t.text.substr(dot + 1)};
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

  Program program() {
    Program p;
    while (cur_.kind == Tok::Ident && (cur_.text == "entry" || cur_.text == "external")) {
      if (cur_.text == "entry") {
        bump();
        auto [cls, m] = split_qualified(expect_ident());
        p.entry_points.push_back({cls, m});
        expect(";");
      } else {
        bump();
        ExternalMethod e;
        if (is_ident("static")) bump();
        e.return_type = type();
        auto [cls, m] = split_qualified(expect_ident());
        e.cls = cls;
        e.name = m;
        e.params = type_list();
        expect(";");
        p.externals.push_back(std::move(e));
      }
    }
    while (cur_.kind != Tok::End) p.classes.push_back(klass());
    if (p.classes.empty()) throw SyntaxError(cur_.line, cur_.col, "program has no classes");
    return p;
  }

 private:
  void bump() { cur_ = lex_.next(); }
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(cur_.line, cur_.col, msg); }
  bool is_ident(std::string_view s) const { return cur_.kind == Tok::Ident && cur_.text == s; }
  bool is_punct(std::string_view s) const { return cur_.kind == Tok::Punct && cur_.text == s; }

  void expect(std::string_view p) {
    if (!is_punct(p)) fail("expected '" + std::string(p) + "'" + found());
    bump();
  }

  std::string found() const {
    if (cur_.kind == Tok::End) return ", found end of input";
    return ", found '" + cur_.text + (cur_.kind == Tok::Int ? std::to_string(cur_.value) : "") + "'";
  }

  Token expect_ident() {
    if (cur_.kind != Tok::Ident) fail("expected identifier" + found());
    Token t = cur_;
    bump();
    return t;
  }

  void expect_keyword(std::string_view k) {
    if (!is_ident(k)) fail("expected '" + std::string(k) + "'" + found());
    bump();
  }

  std::int64_t expect_int() {
    if (cur_.kind != Tok::Int) fail("expected integer" + found());
    auto v = cur_.value;
    bump();
    return v;
  }

  SirType type() {
    Token t = expect_ident();
    SirType ty;
    if (t.text == "int") ty = SirType::int_();
    else if (t.text == "long") ty = SirType::long_();
    else if (t.text == "byte") ty = SirType::byte_();
    else if (t.text == "char") ty = SirType::char_();
    else if (t.text == "bool") ty = SirType::bool_();
    else if (t.text == "string") ty = SirType::string();
    else if (t.text == "void") ty = SirType::void_();
    else ty = SirType::object(t.text);
    while (is_punct("[")) {
      bump();
      expect("]");
      if (ty.is_void()) throw SyntaxError(t.line, t.col, "array of void");
      ty = SirType::array_of(ty);
    }
    return ty;
  }

  std::vector<SirType> type_list() {
    expect("(");
    std::vector<SirType> out;
    if (!is_punct(")")) {
      out.push_back(type());
      while (is_punct(",")) {
        bump();
        out.push_back(type());
      }
    }
    expect(")");
    return out;
  }

  int reg() {
    if (cur_.kind != Tok::Ident || cur_.text.size() < 2 || cur_.text[0] != 'r')
      fail("expected register" + found());
    int v = 0;
    for (std::size_t i = 1; i < cur_.text.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(cur_.text[i])) || v > 100000) fail("bad register '" + cur_.text + "'");
      v = v * 10 + (cur_.text[i] - '0');
    }
    bump();
    return v;
  }

  int target() {
    expect("@");
    const auto v = expect_int();
    if (v < 0 || v > 10'000'000) fail("bad branch target");
    return static_cast<int>(v);
  }

  Class klass() {
    Class c;
    if (is_ident("abstract")) {
      c.is_abstract = true;
      bump();
    }
    expect_keyword("class");
    c.name = expect_ident().text;
    if (is_ident("extends")) {
      bump();
      c.superclass = expect_ident().text;
    }
    expect("{");
    while (!is_punct("}")) {
      if (cur_.kind == Tok::End) fail("unterminated class body");
      member(c);
    }
    bump();
    return c;
  }

  void member(Class& c) {
    const Token start = cur_;
    bool is_static = false;
    bool is_abstract = false;
    if (is_ident("static")) {
      is_static = true;
      bump();
    }
    if (is_ident("abstract")) {
      is_abstract = true;
      bump();
    }
    SirType ty = type();
    std::string name = expect_ident().text;
    if (is_punct(";")) {
      bump();
      if (is_abstract) throw SyntaxError(start.line, start.col, "abstract field");
      (is_static ? c.static_fields : c.instance_fields).push_back({name, ty});
      return;
    }
    Method m;
    m.name = name;
    m.return_type = ty;
    m.is_static = is_static;
    m.is_abstract = is_abstract;
    m.params = type_list();
    if (is_abstract) {
      expect(";");
    } else {
      body(m);
    }
    if (m.name == kStaticInitName && m.is_static) {
      if (c.static_init) throw SyntaxError(start.line, start.col, "duplicate static initializer");
      c.static_init = std::move(m);
    } else {
      c.methods.push_back(std::move(m));
    }
  }

  void body(Method& m) {
    expect("{");
    expect_keyword("regs");
    const auto n = expect_int();
    if (n < 0 || n > 65535) fail("bad register count");
    m.register_count = static_cast<int>(n);
    expect(";");
    while (!is_punct("}")) {
      if (cur_.kind == Tok::End) fail("unterminated method body");
      const Token at = cur_;
      const auto idx = expect_int();
      if (idx != static_cast<std::int64_t>(m.body.size()))
        throw SyntaxError(at.line, at.col, "instruction index " + std::to_string(idx) + " out of sequence (expected " +
                                               std::to_string(m.body.size()) + ")");
      expect(":");
      m.body.push_back(instruction());
      expect(";");
    }
    bump();
  }

  Instruction instruction() {
    const Token op_tok = expect_ident();
    const auto op = op_from_mnemonic(op_tok.text);
    if (!op) throw SyntaxError(op_tok.line, op_tok.col, "unknown opcode '" + op_tok.text + "'");
    Instruction ins;
    ins.op = *op;
    switch (*op) {
      case Op::Const:
        if (is_ident("null")) {
          bump();
          ins.is_null = true;
          ins.dst = reg();
          break;
        }
        ins.type = type();
        ins.dst = reg();
        if (ins.type.is(TypeKind::String)) {
          if (cur_.kind != Tok::Str) fail("expected string literal" + found());
          ins.str = codec::from_wtf8(cur_.text);
          bump();
        } else {
          ins.imm = expect_int();
        }
        break;
      case Op::Move:
        ins.dst = reg();
        ins.srcs = {reg()};
        break;
      case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Rem: case Op::Xor:
      case Op::And: case Op::Or: case Op::Shl: case Op::Shr: case Op::Ushr:
        ins.type = type();
        ins.dst = reg();
        ins.srcs = {reg(), reg()};
        break;
      case Op::Neg:
      case Op::Conv:
        ins.type = type();
        ins.dst = reg();
        ins.srcs = {reg()};
        break;
      case Op::IfEq: case Op::IfNe: case Op::IfLt: case Op::IfLe: case Op::IfGt: case Op::IfGe:
        ins.srcs = {reg(), reg()};
        ins.target = target();
        break;
      case Op::Goto:
        ins.target = target();
        break;
      case Op::Switch: {
        ins.srcs = {reg()};
        expect("{");
        std::set<std::int64_t> keys;
        while (!is_punct("}")) {
          const Token kt = cur_;
          SwitchCase sc;
          sc.key = expect_int();
          expect(":");
          sc.target = target();
          if (!keys.insert(sc.key).second) throw SyntaxError(kt.line, kt.col, "duplicate switch key");
          ins.cases.push_back(sc);
          if (is_punct(",")) bump();
          else if (!is_punct("}")) fail("expected ',' or '}'" + found());
        }
        bump();
        expect_keyword("default");
        ins.target = target();
        break;
      }
      case Op::NewArray:
        ins.type = type();
        if (ins.type.is_void()) fail("array of void");
        ins.dst = reg();
        ins.srcs = {reg()};
        break;
      case Op::ArrayLoad:
        ins.dst = reg();
        ins.srcs = {reg(), reg()};
        break;
      case Op::ArrayStore:
        ins.srcs = {reg(), reg(), reg()};
        break;
      case Op::ArrayLength:
        ins.dst = reg();
        ins.srcs = {reg()};
        break;
      case Op::NewObject:
        ins.dst = reg();
        ins.cls = expect_ident().text;
        break;
      case Op::GetStatic: {
        ins.dst = reg();
        auto [c, f] = split_qualified(expect_ident());
        ins.field = {c, f};
        break;
      }
      case Op::PutStatic: {
        auto [c, f] = split_qualified(expect_ident());
        ins.field = {c, f};
        ins.srcs = {reg()};
        break;
      }
      case Op::GetField: {
        ins.dst = reg();
        ins.srcs = {reg()};
        auto [c, f] = split_qualified(expect_ident());
        ins.field = {c, f};
        break;
      }
      case Op::PutField: {
        ins.srcs = {reg()};
        auto [c, f] = split_qualified(expect_ident());
        ins.field = {c, f};
        ins.srcs.push_back(reg());
        break;
      }
      case Op::Invoke: {
        const Token k = expect_ident();
        if (k.text == "static") ins.kind = InvokeKind::Static;
        else if (k.text == "virtual") ins.kind = InvokeKind::Virtual;
        else if (k.text == "special") ins.kind = InvokeKind::Special;
        else if (k.text == "intrinsic") ins.kind = InvokeKind::Intrinsic;
        else throw SyntaxError(k.line, k.col, "unknown invoke kind '" + k.text + "'");
        auto [c, n] = split_qualified(expect_ident());
        ins.method.cls = c;
        ins.method.name = n;
        if (ins.kind != InvokeKind::Intrinsic) ins.method.params = type_list();
        expect("(");
        if (!is_punct(")")) {
          ins.srcs.push_back(reg());
          while (is_punct(",")) {
            bump();
            ins.srcs.push_back(reg());
          }
        }
        expect(")");
        if (cur_.kind == Tok::Arrow) {
          bump();
          ins.dst = reg();
        }
        break;
      }
      case Op::Return:
        if (!is_punct(";")) ins.srcs = {reg()};
        break;
    }
    return ins;
  }

  Lexer lex_;
  Token cur_;
};

void append_literal_byte(std::string& out, unsigned char c) {
  static constexpr char kHex[] = "0123456789abcdef";
  out += "\\x";
  out += kHex[c >> 4];
  out += kHex[c & 15];
}

std::string reg_name(int r) { return "r" + std::to_string(r); }

std::string type_list_text(const std::vector<SirType>& ts) {
  std::string s = "(";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) s += ", ";
    s += ts[i].to_string();
  }
  return s + ")";
}

std::string method_header(const Method& m) {
  std::string s;
  if (m.is_static) s += "static ";
  if (m.is_abstract) s += "abstract ";
  s += m.return_type.to_string() + " " + m.name + type_list_text(m.params);
  return s;
}

void write_method(std::string& out, const Method& m, std::string_view indent) {
  out += indent;
  out += method_header(m);
  if (m.is_abstract) {
    out += ";\n";
    return;
  }
  out += " {\n";
  out += indent;
  out += "  regs " + std::to_string(m.register_count) + ";\n";
  for (std::size_t i = 0; i < m.body.size(); ++i) {
    out += indent;
    out += "  " + std::to_string(i) + ": " + serialize_instruction(m.body[i]) + ";\n";
  }
  out += indent;
  out += "}\n";
}

}  // namespace

std::string quote_literal(std::u16string_view s) {
  std::string out = "\"";
  // Lone surrogates are emitted byte-wise as escapes so the file stays UTF-8.
  std::size_t i = 0;
  while (i < s.size()) {
    const char16_t c = s[i];
    const bool high = c >= 0xD800 && c <= 0xDBFF;
    const bool paired = high && i + 1 < s.size() && s[i + 1] >= 0xDC00 && s[i + 1] <= 0xDFFF;
    if (paired) {
      out += codec::to_wtf8(s.substr(i, 2));
      i += 2;
      continue;
    }
    if (c == '"' || c == '\\') {
      out += '\\';
      out += static_cast<char>(c);
    } else if (c >= 0x20 && c < 0x7F) {
      out += static_cast<char>(c);
    } else if (c < 0xA0 || (c >= 0xD800 && c <= 0xDFFF) || c == 0xFFFD || c >= 0xFFF0) {
      for (const char b : codec::to_wtf8(s.substr(i, 1))) append_literal_byte(out, static_cast<unsigned char>(b));
    } else {
      out += codec::to_wtf8(s.substr(i, 1));
    }
    ++i;
  }
  out += '"';
  return out;
}

std::string serialize_instruction(const Instruction& ins) {
  std::string s(mnemonic(ins.op));
  auto r = [&](int x) { s += " " + reg_name(x); };
  auto tgt = [&](int t) { s += " @" + std::to_string(t); };
  switch (ins.op) {
    case Op::Const:
      if (ins.is_null) {
        s += " null";
        r(ins.dst);
      } else {
        s += " " + ins.type.to_string();
        r(ins.dst);
        s += " ";
        s += ins.type.is(TypeKind::String) ? quote_literal(ins.str) : std::to_string(ins.imm);
      }
      break;
    case Op::Move:
      r(ins.dst);
      r(ins.srcs[0]);
      break;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Rem: case Op::Xor:
    case Op::And: case Op::Or: case Op::Shl: case Op::Shr: case Op::Ushr:
      s += " " + ins.type.to_string();
      r(ins.dst);
      r(ins.srcs[0]);
      r(ins.srcs[1]);
      break;
    case Op::Neg:
    case Op::Conv:
      s += " " + ins.type.to_string();
      r(ins.dst);
      r(ins.srcs[0]);
      break;
    case Op::IfEq: case Op::IfNe: case Op::IfLt: case Op::IfLe: case Op::IfGt: case Op::IfGe:
      r(ins.srcs[0]);
      r(ins.srcs[1]);
      tgt(ins.target);
      break;
    case Op::Goto:
      tgt(ins.target);
      break;
    case Op::Switch:
      r(ins.srcs[0]);
      s += " {";
      for (std::size_t i = 0; i < ins.cases.size(); ++i) {
        s += i ? ", " : " ";
        s += std::to_string(ins.cases[i].key) + ": @" + std::to_string(ins.cases[i].target);
      }
      s += " } default";
      tgt(ins.target);
      break;
    case Op::NewArray:
      s += " " + ins.type.to_string();
      r(ins.dst);
      r(ins.srcs[0]);
      break;
    case Op::ArrayLoad:
      r(ins.dst);
      r(ins.srcs[0]);
      r(ins.srcs[1]);
      break;
    case Op::ArrayStore:
      r(ins.srcs[0]);
      r(ins.srcs[1]);
      r(ins.srcs[2]);
      break;
    case Op::ArrayLength:
      r(ins.dst);
      r(ins.srcs[0]);
      break;
    case Op::NewObject:
      r(ins.dst);
      s += " " + ins.cls;
      break;
    case Op::GetStatic:
      r(ins.dst);
      s += " " + ins.field.cls + "." + ins.field.name;
      break;
    case Op::PutStatic:
      s += " " + ins.field.cls + "." + ins.field.name;
      r(ins.srcs[0]);
      break;
    case Op::GetField:
      r(ins.dst);
      r(ins.srcs[0]);
      s += " " + ins.field.cls + "." + ins.field.name;
      break;
    case Op::PutField:
      r(ins.srcs[0]);
      s += " " + ins.field.cls + "." + ins.field.name;
      r(ins.srcs[1]);
      break;
    case Op::Invoke: {
      s += " ";
      s += to_string(ins.kind);
      s += " " + ins.method.cls + "." + ins.method.name;
      if (ins.kind != InvokeKind::Intrinsic) s += type_list_text(ins.method.params);
      s += " (";
      for (std::size_t i = 0; i < ins.srcs.size(); ++i) {
        if (i) s += ", ";
        s += reg_name(ins.srcs[i]);
      }
      s += ")";
      if (ins.has_dst()) s += " -> " + reg_name(ins.dst);
      break;
    }
    case Op::Return:
      if (!ins.srcs.empty()) r(ins.srcs[0]);
      break;
  }
  return s;
}

std::string serialize_method(const Method& m) {
  std::string out;
  write_method(out, m, "");
  return out;
}

std::string serialize(const Program& p) {
  std::string out;
  for (const auto& e : p.entry_points) out += "entry " + e.cls + "." + e.method + ";\n";
  for (const auto& e : p.externals)
    out += "external static " + e.return_type.to_string() + " " + e.cls + "." + e.name + type_list_text(e.params) + ";\n";
  if (!p.entry_points.empty() || !p.externals.empty()) out += "\n";
  for (std::size_t ci = 0; ci < p.classes.size(); ++ci) {
    const Class& c = p.classes[ci];
    if (ci) out += "\n";
    if (c.is_abstract) out += "abstract ";
    out += "class " + c.name;
    if (c.superclass) out += " extends " + *c.superclass;
    out += " {\n";
    for (const auto& f : c.static_fields) out += "  static " + f.type.to_string() + " " + f.name + ";\n";
    for (const auto& f : c.instance_fields) out += "  " + f.type.to_string() + " " + f.name + ";\n";
    if (c.static_init) write_method(out, *c.static_init, "  ");
    for (const auto& m : c.methods) write_method(out, m, "  ");
    out += "}\n";
  }
  return out;
}

Program parse_program_unchecked(std::string_view text) { return Parser(text).program(); }

Program parse_program(std::string_view text) {
  Program p = parse_program_unchecked(text);
  typecheck(p);
  return p;
}

}  // namespace strhound::sir
