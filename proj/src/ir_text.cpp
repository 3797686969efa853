#include <cctype>
#include <cstdio>
#include <sstream>

#include "tiledrive/ir.hpp"

namespace td {

namespace {

std::string hex_word(uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

void print_index(std::ostream& os, const IndexExpr& e) {
  if (e.is_const()) {
    os << e.value;
  } else {
    os << '%' << e.iv;
  }
}

void print_tile(std::ostream& os, const TileRef& t) {
  os << '%' << t.base << '[';
  print_index(os, t.row_start);
  os << ',';
  print_index(os, t.col_start);
  os << "]<" << t.rows << 'x' << t.cols << '>';
}

void print_ops(std::ostream& os, const std::vector<Op>& ops, int depth) {
  std::string ind(static_cast<size_t>(depth) * 2, ' ');
  for (const Op& op : ops) {
    if (const auto* lit = std::get_if<SendLiteralOp>(&op.node)) {
      os << ind << "accel.sendLiteral(" << hex_word(lit->word.value) << ")\n";
    } else if (const auto* send = std::get_if<SendOp>(&op.node)) {
      os << ind << "accel.send(";
      bool bracket = send->payload.size() > 1;
      if (bracket) os << '[';
      for (size_t i = 0; i < send->payload.size(); ++i) {
        if (i) os << ", ";
        if (const auto* w = std::get_if<InstructionWord>(&send->payload[i])) {
          os << hex_word(w->value);
        } else {
          print_tile(os, std::get<TileRef>(send->payload[i]));
        }
      }
      if (bracket) os << ']';
      os << ")\n";
    } else if (const auto* recv = std::get_if<RecvOp>(&op.node)) {
      os << ind << "accel.recv {mode=\""
         << (recv->mode == RecvMode::Accumulate ? "accumulate" : "overwrite")
         << "\"} (";
      print_tile(os, recv->target);
      os << ")\n";
    } else {
      const auto& loop = std::get<ForOp>(op.node);
      os << ind << "scf.for %" << loop.iv << " = " << loop.lower << " to "
         << loop.upper << " step " << loop.step << " {\n";
      print_ops(os, loop.body, depth + 1);
      os << ind << "}\n";
    }
  }
}

}  // namespace

std::string print_ir(const Program& p) {
  std::ostringstream os;
  os << "func " << p.name << " (m=" << p.dims.m << ", n=" << p.dims.n
     << ", k=" << p.dims.k << ", tm=" << p.tiling.tm << ", tn=" << p.tiling.tn
     << ", tk=" << p.tiling.tk << ")";
  if (p.accel_requirements.needs_double_buffer) os << " requires #double_buffer";
  os << " {\n";
  for (const Buffer& b : p.buffers) {
    os << "  %" << b.id << " = alloc ";
    if (b.space == MemSpace::Dma) os << "#dma ";
    os << '<' << b.rows << 'x' << b.cols << ">\n";
  }
  print_ops(os, p.body, 1);
  os << "}\n";
  return os.str();
}

namespace {

struct Token {
  enum Kind { Ident, Int, Hex, Str, Punct, End } kind = End;
  std::string text;
  uint32_t hex = 0;
  int64_t num = 0;
  int line = 1;
  int col = 1;
};

class Lexer {
public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(Err::Parse, what + " at " + std::to_string(tok_.line) + ":" +
                         std::to_string(tok_.col));
  }

private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) return;
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      if (c == '0' && pos_ + 1 < src_.size() &&
          (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
        size_t start = pos_;
        bump(); bump();
        uint64_t v = 0;
        size_t digits = 0;
        while (pos_ < src_.size() &&
               std::isxdigit(static_cast<unsigned char>(src_[pos_]))) {
          v = v * 16 + static_cast<uint64_t>(hexval(src_[pos_]));
          ++digits;
          bump();
        }
        if (digits == 0 || digits > 8) {
          fail(Err::Parse, "bad hex literal at " + std::to_string(tok_.line) +
                               ":" + std::to_string(tok_.col));
        }
        tok_.kind = Token::Hex;
        tok_.hex = static_cast<uint32_t>(v);
        tok_.text = src_.substr(start, pos_ - start);
        return;
      }
      int64_t v = 0;
      size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        v = v * 10 + (src_[pos_] - '0');
        bump();
      }
      tok_.kind = Token::Int;
      tok_.num = v;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_' || src_[pos_] == '.')) {
        bump();
      }
      tok_.kind = Token::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (c == '"') {
      bump();
      size_t start = pos_;
      while (pos_ < src_.size() && src_[pos_] != '"') bump();
      if (pos_ >= src_.size()) {
        fail(Err::Parse, "unterminated string at " + std::to_string(tok_.line) +
                             ":" + std::to_string(tok_.col));
      }
      tok_.kind = Token::Str;
      tok_.text = src_.substr(start, pos_ - start);
      bump();
      return;
    }
    tok_.kind = Token::Punct;
    tok_.text = std::string(1, c);
    bump();
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') bump();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        bump();
      } else {
        break;
      }
    }
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  static int hexval(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return c - 'A' + 10;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program program() {
    expect_ident("func");
    Program p;
    p.name = ident("program name");
    expect_punct("(");
    p.dims.m = dim_field("m");
    expect_punct(",");
    p.dims.n = dim_field("n");
    expect_punct(",");
    p.dims.k = dim_field("k");
    expect_punct(",");
    p.tiling.tm = dim_field("tm");
    expect_punct(",");
    p.tiling.tn = dim_field("tn");
    expect_punct(",");
    p.tiling.tk = dim_field("tk");
    expect_punct(")");
    if (lex_.peek().kind == Token::Ident && lex_.peek().text == "requires") {
      lex_.take();
      expect_punct("#");
      std::string attr = ident("requirement");
      if (attr != "double_buffer") lex_.error("unknown requirement '" + attr + "'");
      p.accel_requirements.needs_double_buffer = true;
    }
    expect_punct("{");
    while (at_alloc()) p.buffers.push_back(alloc());
    while (!at_punct("}")) p.body.push_back(op());
    expect_punct("}");
    if (lex_.peek().kind != Token::End) lex_.error("trailing input");
    return p;
  }

private:
  bool at_punct(const char* s) const {
    return lex_.peek().kind == Token::Punct && lex_.peek().text == s;
  }

  bool at_alloc() {
    // %id = alloc ...; tile refs never start an op, so '%' means alloc here.
    return at_punct("%");
  }

  void expect_punct(const char* s) {
    if (!at_punct(s)) lex_.error(std::string("expected '") + s + "'");
    lex_.take();
  }

  void expect_ident(const char* s) {
    if (lex_.peek().kind != Token::Ident || lex_.peek().text != s) {
      lex_.error(std::string("expected '") + s + "'");
    }
    lex_.take();
  }

  std::string ident(const char* what) {
    if (lex_.peek().kind != Token::Ident) {
      lex_.error(std::string("expected ") + what);
    }
    return lex_.take().text;
  }

  int64_t integer() {
    if (lex_.peek().kind != Token::Int) lex_.error("expected integer");
    return lex_.take().num;
  }

  int64_t dim_field(const char* key) {
    expect_ident(key);
    expect_punct("=");
    return integer();
  }

  // Sizes print as <4x4>; the lexer sees INT then the ident "x4", so accept
  // either a bare "x" separator or one with the second number glued on.
  std::pair<int64_t, int64_t> extent() {
    expect_punct("<");
    int64_t rows = integer();
    std::string sep = ident("'x'");
    int64_t cols = 0;
    if (sep == "x") {
      cols = integer();
    } else if (sep.size() > 1 && sep[0] == 'x') {
      for (size_t i = 1; i < sep.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(sep[i]))) {
          lex_.error("bad extent");
        }
        cols = cols * 10 + (sep[i] - '0');
      }
    } else {
      lex_.error("bad extent");
    }
    expect_punct(">");
    return {rows, cols};
  }

  Buffer alloc() {
    expect_punct("%");
    Buffer b;
    b.id = ident("buffer id");
    expect_punct("=");
    expect_ident("alloc");
    if (at_punct("#")) {
      lex_.take();
      std::string tag = ident("allocation tag");
      if (tag != "dma") lex_.error("unknown allocation tag '" + tag + "'");
      b.space = MemSpace::Dma;
    }
    auto [rows, cols] = extent();
    b.rows = rows;
    b.cols = cols;
    return b;
  }

  IndexExpr index() {
    if (at_punct("%")) {
      lex_.take();
      return IndexExpr::var(ident("induction variable"));
    }
    return IndexExpr::constant(integer());
  }

  TileRef tile() {
    expect_punct("%");
    TileRef t;
    t.base = ident("buffer id");
    expect_punct("[");
    t.row_start = index();
    expect_punct(",");
    t.col_start = index();
    expect_punct("]");
    auto [rows, cols] = extent();
    t.rows = rows;
    t.cols = cols;
    return t;
  }

  PayloadItem payload_item() {
    if (lex_.peek().kind == Token::Hex) {
      return InstructionWord{lex_.take().hex};
    }
    return tile();
  }

  Op op() {
    if (lex_.peek().kind != Token::Ident) lex_.error("expected an op");
    std::string head = lex_.take().text;
    if (head == "accel.sendLiteral") {
      expect_punct("(");
      if (lex_.peek().kind != Token::Hex) lex_.error("expected hex literal");
      uint32_t w = lex_.take().hex;
      expect_punct(")");
      return Op{SendLiteralOp{{w}}};
    }
    if (head == "accel.send") {
      expect_punct("(");
      SendOp send;
      bool bracket = at_punct("[");
      if (bracket) lex_.take();
      send.payload.push_back(payload_item());
      while (at_punct(",")) {
        lex_.take();
        send.payload.push_back(payload_item());
      }
      if (bracket) expect_punct("]");
      expect_punct(")");
      return Op{std::move(send)};
    }
    if (head == "accel.recv") {
      expect_punct("{");
      expect_ident("mode");
      expect_punct("=");
      if (lex_.peek().kind != Token::Str) lex_.error("expected mode string");
      std::string mode = lex_.take().text;
      RecvOp recv;
      if (mode == "accumulate") {
        recv.mode = RecvMode::Accumulate;
      } else if (mode == "overwrite") {
        recv.mode = RecvMode::Overwrite;
      } else {
        lex_.error("unknown receive mode '" + mode + "'");
      }
      expect_punct("}");
      expect_punct("(");
      recv.target = tile();
      expect_punct(")");
      return Op{std::move(recv)};
    }
    if (head == "scf.for") {
      ForOp loop;
      expect_punct("%");
      loop.iv = ident("induction variable");
      expect_punct("=");
      loop.lower = integer();
      expect_ident("to");
      loop.upper = integer();
      expect_ident("step");
      loop.step = integer();
      expect_punct("{");
      while (!at_punct("}")) loop.body.push_back(op());
      expect_punct("}");
      return Op{std::move(loop)};
    }
    lex_.error("unknown op '" + head + "'");
  }

  Lexer lex_;
};

}  // namespace

ParseResult parse_ir(const std::string& text) {
  ParseResult result;
  Program p;
  try {
    p = Parser(text).program();
  } catch (const Error& e) {
    result.diagnostics.push_back({"SyntaxError", e.what(), ""});
    return result;
  }
  result.diagnostics = validate(p);
  if (result.diagnostics.empty()) result.program = std::move(p);
  return result;
}

}  // namespace td
