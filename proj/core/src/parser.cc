#include <cctype>
#include <charconv>
#include <string>

#include "mesh/mir.h"

namespace mesh::mir {

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = column_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (is_ident_start(c)) {
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) t.text += advance();
        t.kind = Tok::Ident;
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '-' && pos_ + 1 < text_.size() &&
                  std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        t.text += advance();
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
          t.text += advance();
        }
        t.kind = Tok::Int;
      } else if (std::string_view("(){}[],:=").find(c) != std::string_view::npos) {
        t.text = advance();
        t.kind = Tok::Punct;
      } else {
        throw ParseError({t.line, t.column, std::string("unexpected character '") + c + "'"});
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '%' || c == '.';
  }
  static bool is_ident_char(char c) {
    return is_ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
  }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    return c;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        return;
      }
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Program program() {
    Program p;
    while (peek().kind != Tok::End) {
      const Token& t = peek();
      if (is_word("global")) {
        p.globals.push_back(global());
      } else if (is_word("extern")) {
        p.externs.push_back(extern_decl());
      } else if (is_word("fn")) {
        p.functions.push_back(function());
      } else {
        fail(t, "expected 'global', 'extern' or 'fn'");
      }
    }
    return p;
  }

 private:
  const Token& peek(size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_word(std::string_view w, size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Ident && peek(ahead).text == w;
  }
  bool is_punct(char c, size_t ahead = 0) const {
    return peek(ahead).kind == Tok::Punct && peek(ahead).text[0] == c;
  }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    throw ParseError({t.line, t.column, msg + ", got " + got});
  }

  void expect_word(std::string_view w) {
    if (!is_word(w)) fail(peek(), "expected '" + std::string(w) + "'");
    next();
  }
  void expect_punct(char c) {
    if (!is_punct(c)) fail(peek(), std::string("expected '") + c + "'");
    next();
  }
  std::string ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(peek(), std::string("expected ") + what);
    return next().text;
  }
  int64_t integer() {
    const Token& t = peek();
    if (t.kind != Tok::Int) fail(t, "expected integer");
    std::string_view s = t.text;
    bool negative = false;
    if (s.front() == '-') {
      negative = true;
      s.remove_prefix(1);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      base = 16;
      s.remove_prefix(2);
    }
    uint64_t magnitude = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), magnitude, base);
    if (ec != std::errc() || end != s.data() + s.size()) fail(t, "malformed integer");
    next();
    return negative ? static_cast<int64_t>(0 - magnitude) : static_cast<int64_t>(magnitude);
  }
  uint64_t non_negative(const char* what) {
    const Token& t = peek();
    int64_t v = integer();
    if (v < 0) fail(t, std::string(what) + " must be non-negative");
    return static_cast<uint64_t>(v);
  }
  unsigned width() {
    const Token& t = peek();
    std::string w = ident("access width");
    if (w == "i8") return 1;
    if (w == "i16") return 2;
    if (w == "i32") return 4;
    if (w == "i64") return 8;
    fail(t, "expected access width i8, i16, i32 or i64");
  }
  SourceInfo here() const { return {peek().line, peek().column, -1}; }

  Global global() {
    Global g;
    g.src = here();
    expect_word("global");
    g.name = ident("global name");
    g.size = non_negative("global size");
    return g;
  }

  ExternDecl extern_decl() {
    ExternDecl e;
    e.src = here();
    expect_word("extern");
    e.name = ident("extern name");
    expect_punct('(');
    e.param_count = static_cast<unsigned>(non_negative("parameter count"));
    expect_punct(')');
    bool have_behavior = false;
    while (true) {
      if (is_word("returns_arg")) {
        next();
        e.returns_arg = static_cast<unsigned>(non_negative("returns_arg"));
      } else if (is_word("behavior")) {
        next();
        const Token& t = peek();
        auto b = parse_extern_behavior(ident("behavior name"));
        if (!b) fail(t, "unknown extern behavior");
        e.behavior = *b;
        have_behavior = true;
      } else {
        break;
      }
    }
    if (!have_behavior && !e.returns_arg) {
      throw ParseError({e.src.line, e.src.column,
                        "extern '" + e.name + "' needs a behavior or returns_arg"});
    }
    return e;
  }

  std::vector<std::string> reg_list(char open, char close) {
    std::vector<std::string> out;
    expect_punct(open);
    if (!is_punct(close)) {
      out.push_back(ident("register"));
      while (is_punct(',')) {
        next();
        out.push_back(ident("register"));
      }
    }
    expect_punct(close);
    return out;
  }

  Function function() {
    Function f;
    f.src = here();
    expect_word("fn");
    f.name = ident("function name");
    f.params = reg_list('(', ')');
    expect_punct('{');
    int index = 0;
    while (!is_punct('}')) {
      f.blocks.push_back(block(index));
    }
    if (f.blocks.empty()) fail(peek(), "function needs at least one block");
    expect_punct('}');
    return f;
  }

  bool at_terminator() const { return is_word("br") || is_word("cbr") || is_word("ret"); }

  Block block(int& index) {
    Block b;
    if (peek().kind != Tok::Ident || !is_punct(':', 1)) fail(peek(), "expected block label");
    b.label = next().text;
    next();
    while (!at_terminator()) {
      if (peek().kind == Tok::End || is_punct('}')) fail(peek(), "block is missing a terminator");
      Instr in = instr();
      in.src.index = index++;
      b.instrs.push_back(std::move(in));
    }
    b.term = terminator();
    return b;
  }

  Instr instr() {
    Instr in;
    in.src = here();
    if (is_word("store")) {
      next();
      in.op = Opcode::Store;
      in.width = width();
      in.args.push_back(ident("value register"));
      expect_punct(',');
      in.args.push_back(ident("address register"));
      return in;
    }
    if (is_word("print")) {
      next();
      in.op = Opcode::Print;
      in.args.push_back(ident("register"));
      return in;
    }
    if (is_word("check")) {
      next();
      in.op = Opcode::Check;
      in.width = width();
      in.args.push_back(ident("register"));
      return in;
    }
    if (is_word("argcheck")) {
      next();
      in.op = Opcode::ArgCheck;
      in.args.push_back(ident("register"));
      return in;
    }
    if (is_word("call")) {
      call(in);
      return in;
    }
    if (peek().kind != Tok::Ident || !is_punct('=', 1)) fail(peek(), "expected instruction");
    in.dest = next().text;
    next();
    rhs(in);
    return in;
  }

  void call(Instr& in) {
    expect_word("call");
    in.op = Opcode::Call;
    in.name = ident("callee name");
    in.args = reg_list('(', ')');
  }

  void binary(Instr& in) {
    in.args.push_back(ident("register"));
    expect_punct(',');
    in.args.push_back(ident("register"));
  }

  void rhs(Instr& in) {
    const Token& t = peek();
    std::string op = ident("operation");
    if (op == "const") {
      in.op = Opcode::Const;
      in.imm = integer();
    } else if (op == "alloca") {
      in.op = Opcode::Alloca;
      in.imm = static_cast<int64_t>(non_negative("alloca size"));
    } else if (op == "global_addr") {
      in.op = Opcode::GlobalAddr;
      in.name = ident("global name");
    } else if (op == "load") {
      in.op = Opcode::Load;
      in.width = width();
      in.args.push_back(ident("address register"));
    } else if (op == "ptradd") {
      in.op = Opcode::PtrAdd;
      in.args.push_back(ident("register"));
      expect_punct(',');
      if (peek().kind == Tok::Int) {
        in.imm = integer();
        in.imm_operand = true;
      } else {
        in.args.push_back(ident("offset register or integer"));
      }
    } else if (op == "add" || op == "sub" || op == "mul") {
      in.op = op == "add" ? Opcode::Add : op == "sub" ? Opcode::Sub : Opcode::Mul;
      binary(in);
    } else if (op == "icmp") {
      in.op = Opcode::ICmp;
      const Token& pt = peek();
      auto pred = parse_predicate(ident("predicate"));
      if (!pred) fail(pt, "unknown icmp predicate");
      in.pred = *pred;
      binary(in);
    } else if (op == "phi") {
      in.op = Opcode::Phi;
      do {
        if (!in.incoming.empty()) next();
        expect_punct('[');
        PhiIncoming inc;
        inc.label = ident("predecessor label");
        expect_punct(',');
        inc.reg = ident("register");
        expect_punct(']');
        in.incoming.push_back(std::move(inc));
      } while (is_punct(','));
    } else if (op == "call") {
      --pos_;
      call(in);
    } else if (op == "strip" || op == "tagof") {
      in.op = op == "strip" ? Opcode::Strip : Opcode::TagOf;
      in.args.push_back(ident("register"));
    } else if (op == "retag") {
      in.op = Opcode::Retag;
      binary(in);
    } else {
      fail(t, "unknown operation");
    }
  }

  Terminator terminator() {
    Terminator t;
    t.src = here();
    std::string kw = next().text;
    if (kw == "br") {
      t.kind = TermKind::Br;
      t.targets.push_back(ident("target label"));
    } else if (kw == "cbr") {
      t.kind = TermKind::CondBr;
      t.cond = ident("condition register");
      expect_punct(',');
      t.targets.push_back(ident("target label"));
      expect_punct(',');
      t.targets.push_back(ident("target label"));
    } else {
      t.kind = TermKind::Ret;
      // A following identifier is a return value unless it opens the next block.
      if (peek().kind == Tok::Ident && !is_punct(':', 1)) t.value = next().text;
    }
    return t;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

}  // namespace

Program parse_syntax(std::string_view text) {
  return Parser(Lexer(text).run()).program();
}

Program parse(std::string_view text) {
  Program p = parse_syntax(text);
  auto diags = validate(p);
  if (!diags.empty()) throw ParseError(diags.front());
  return p;
}

}  // namespace mesh::mir
