#include "rtlcse/ir.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace rtlcse::ir {

namespace {

struct Token {
  enum class Kind { Word, Number, String, Punct, End };
  Kind kind = Kind::End;
  std::string text;
};

class Lexer {
public:
  Lexer(std::string_view line, int lineno) : src_(line), lineno_(lineno) { advance(); }

  const Token &peek() const { return tok_; }
  bool at_end() const { return tok_.kind == Token::Kind::End; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  bool accept(std::string_view punct) {
    if ((tok_.kind == Token::Kind::Punct || tok_.kind == Token::Kind::Word) && tok_.text == punct) {
      advance();
      return true;
    }
    return false;
  }

  void expect(std::string_view punct) {
    if (!accept(punct))
      fail("expected '" + std::string(punct) + "', found " + describe(tok_));
  }

  std::string word() {
    if (tok_.kind != Token::Kind::Word)
      fail("expected identifier, found " + describe(tok_));
    return next().text;
  }

  std::string string() {
    if (tok_.kind != Token::Kind::String)
      fail("expected string literal, found " + describe(tok_));
    return next().text;
  }

  std::int64_t integer() {
    bool neg = false;
    if (accept("-"))
      neg = true;
    if (tok_.kind != Token::Kind::Number)
      fail("expected integer, found " + describe(tok_));
    std::string text = next().text;
    if (neg)
      text = "-" + text;
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      fail("invalid integer '" + text + "'");
    return v;
  }

  std::uint32_t positive() {
    std::int64_t v = integer();
    if (v < 1 || v > 0xFFFFFFFFLL)
      fail("expected positive identifier, found " + std::to_string(v));
    return static_cast<std::uint32_t>(v);
  }

  bool peek_reg() const {
    return tok_.kind == Token::Kind::Word && tok_.text.size() > 1 && tok_.text[0] == 'r' &&
           std::isdigit(static_cast<unsigned char>(tok_.text[1]));
  }

  Reg reg() {
    if (!peek_reg())
      fail("expected register, found " + describe(tok_));
    std::string t = next().text;
    std::uint32_t id = 0;
    auto [ptr, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), id);
    if (ec != std::errc() || ptr != t.data() + t.size() || id == 0)
      fail("invalid register '" + t + "'");
    return Reg{id};
  }

  void end() {
    if (!at_end())
      fail("unexpected " + describe(tok_));
  }

  [[noreturn]] void fail(const std::string &msg) const { throw ParseError(lineno_, msg); }

private:
  static std::string describe(const Token &t) {
    return t.kind == Token::Kind::End ? "end of line" : "'" + t.text + "'";
  }

  void advance() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
    if (pos_ >= src_.size() || src_[pos_] == '#' || src_.substr(pos_, 2) == "//") {
      tok_ = Token{};
      pos_ = src_.size();
      return;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '.'))
        ++pos_;
      tok_ = {Token::Kind::Word, std::string(src_.substr(start, pos_ - start))};
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      tok_ = {Token::Kind::Number, std::string(src_.substr(start, pos_ - start))};
    } else if (c == '"') {
      std::size_t end = src_.find('"', pos_ + 1);
      if (end == std::string_view::npos)
        throw ParseError(lineno_, "unterminated string literal");
      tok_ = {Token::Kind::String, std::string(src_.substr(pos_ + 1, end - pos_ - 1))};
      pos_ = end + 1;
    } else if (src_.substr(pos_, 2) == "->") {
      tok_ = {Token::Kind::Punct, "->"};
      pos_ += 2;
    } else if (std::string_view("()[]{},:+*=-").find(c) != std::string_view::npos) {
      tok_ = {Token::Kind::Punct, std::string(1, c)};
      ++pos_;
    } else {
      throw ParseError(lineno_, std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int lineno_;
  Token tok_;
};

std::vector<Reg> reg_list(Lexer &lx) {
  std::vector<Reg> regs;
  if (!lx.peek_reg())
    return regs;
  regs.push_back(lx.reg());
  while (lx.accept(","))
    regs.push_back(lx.reg());
  return regs;
}

std::int64_t signed_offset(Lexer &lx) {
  if (lx.accept("+"))
    return lx.integer();
  lx.expect("-");
  return -lx.integer();
}

std::pair<AddrMode, std::vector<Reg>> addressing(Lexer &lx) {
  AddrMode mode;
  std::vector<Reg> args;
  lx.expect("[");
  if (lx.accept("global")) {
    mode.kind = AddrMode::Kind::Global;
    mode.symbol = lx.string();
    mode.offset = signed_offset(lx);
  } else {
    args.push_back(lx.reg());
    if (lx.accept("+") && lx.peek_reg()) {
      mode.kind = AddrMode::Kind::Indexed;
      args.push_back(lx.reg());
      lx.expect("*");
      std::int64_t scale = lx.integer();
      if (scale != 1 && scale != 2 && scale != 4 && scale != 8)
        lx.fail("invalid scale " + std::to_string(scale));
      mode.scale = static_cast<std::int32_t>(scale);
      mode.offset = signed_offset(lx);
    } else {
      mode.kind = AddrMode::Kind::Based;
      // The '+' may already have been consumed by the lookahead above.
      if (lx.peek().kind == Token::Kind::Number || lx.peek().text == "-")
        mode.offset = lx.integer();
      else
        mode.offset = signed_offset(lx);
    }
  }
  lx.expect("]");
  return {mode, args};
}

NodeId successor_arrow(Lexer &lx) {
  lx.expect("->");
  return NodeId{lx.positive()};
}

Instruction instruction(Lexer &lx) {
  if (lx.accept("nop")) {
    Inop i{successor_arrow(lx)};
    return i;
  }
  if (lx.accept("return")) {
    Ireturn r;
    if (lx.peek_reg())
      r.value = lx.reg();
    return r;
  }
  if (lx.accept("if")) {
    std::string cname = lx.word();
    auto cond = condition_from_name(cname);
    if (!cond)
      lx.fail("unknown condition '" + cname + "'");
    Icond c;
    c.cond = *cond;
    c.args = reg_list(lx);
    if (c.args.size() != 2)
      lx.fail("condition expects 2 arguments");
    lx.expect("then");
    c.ifso = NodeId{lx.positive()};
    lx.expect("else");
    c.ifnot = NodeId{lx.positive()};
    return c;
  }
  if (lx.accept("store")) {
    std::string cname = lx.word();
    auto chunk = chunk_from_name(cname);
    if (!chunk)
      lx.fail("unknown chunk '" + cname + "'");
    Istore s;
    s.chunk = *chunk;
    std::tie(s.mode, s.args) = addressing(lx);
    s.src = lx.reg();
    s.succ = successor_arrow(lx);
    return s;
  }
  Reg dest = lx.reg();
  lx.expect("=");
  if (lx.accept("load")) {
    std::string cname = lx.word();
    auto chunk = chunk_from_name(cname);
    if (!chunk)
      lx.fail("unknown chunk '" + cname + "'");
    Iload l;
    l.chunk = *chunk;
    std::tie(l.mode, l.args) = addressing(lx);
    l.dest = dest;
    l.succ = successor_arrow(lx);
    return l;
  }
  if (lx.accept("call")) {
    Icall c;
    c.callee = lx.string();
    lx.expect("(");
    c.args = reg_list(lx);
    lx.expect(")");
    c.dest = dest;
    c.succ = successor_arrow(lx);
    return c;
  }
  std::string opname = lx.word();
  auto code = opcode_from_name(opname);
  if (!code)
    lx.fail("unknown operation '" + opname + "'");
  Iop op;
  op.op.code = *code;
  op.dest = dest;
  if (has_imm(*code)) {
    op.op.imm = lx.integer();
    if (arity(*code) > 0)
      lx.expect(",");
  }
  op.args = reg_list(lx);
  if (static_cast<int>(op.args.size()) != arity(*code))
    lx.fail(opname + " expects " + std::to_string(arity(*code)) + " argument(s), got " +
            std::to_string(op.args.size()));
  op.succ = successor_arrow(lx);
  return op;
}

} // namespace

Program parse(const std::string &text) {
  Program prog;
  bool have_main = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  Function *cur = nullptr;
  int cur_line = 0;
  bool have_entry = false;
  std::map<NodeId, int> node_lines;

  auto close_function = [&](int at) {
    if (!have_entry)
      throw ParseError(at, "function " + cur->name + " has no entry declaration");
    for (const auto &[n, i] : cur->code)
      for (NodeId s : successors(i))
        if (!cur->code.count(s))
          throw ParseError(node_lines[n], "reference to unknown node " + std::to_string(s.id));
    if (!cur->code.count(cur->entry))
      throw ParseError(cur_line, "entry node " + std::to_string(cur->entry.id) + " is not defined");
    cur = nullptr;
  };

  while (std::getline(in, line)) {
    ++lineno;
    Lexer lx(line, lineno);
    if (lx.at_end())
      continue;
    if (cur == nullptr) {
      if (lx.accept("global")) {
        std::string sym = lx.string();
        lx.expect("size");
        std::int64_t size = lx.integer();
        if (size <= 0)
          lx.fail("global size must be positive");
        if (!prog.globals.emplace(sym, size).second)
          lx.fail("duplicate global \"" + sym + "\"");
        lx.end();
      } else if (lx.accept("main")) {
        prog.main = lx.string();
        have_main = true;
        lx.end();
      } else if (lx.accept("function")) {
        Function f;
        f.name = lx.word();
        lx.expect("(");
        f.params = reg_list(lx);
        lx.expect(")");
        lx.expect("stack");
        f.stacksize = lx.integer();
        if (f.stacksize < 0)
          lx.fail("stack size must be non-negative");
        lx.expect("{");
        lx.end();
        if (prog.functions.count(f.name))
          lx.fail("duplicate function " + f.name);
        std::string fname = f.name;
        cur = &prog.functions.emplace(fname, std::move(f)).first->second;
        cur_line = lineno;
        have_entry = false;
        node_lines.clear();
      } else {
        lx.fail("expected 'global', 'main' or 'function'");
      }
      continue;
    }
    if (lx.accept("}")) {
      lx.end();
      close_function(lineno);
      continue;
    }
    if (lx.accept("entry")) {
      cur->entry = NodeId{lx.positive()};
      have_entry = true;
      lx.end();
      continue;
    }
    NodeId n{lx.positive()};
    lx.expect(":");
    Instruction ins = instruction(lx);
    lx.end();
    if (!cur->code.emplace(n, std::move(ins)).second)
      lx.fail("duplicate node " + std::to_string(n.id));
    node_lines[n] = lineno;
  }
  if (cur != nullptr)
    throw ParseError(lineno, "unterminated function " + cur->name);
  if (!have_main) {
    if (prog.functions.count("main"))
      prog.main = "main";
    else if (prog.functions.size() == 1)
      prog.main = prog.functions.begin()->first;
  }
  auto errs = validate(prog);
  if (!errs.empty())
    throw ParseError(lineno, errs.front());
  return prog;
}

} // namespace rtlcse::ir
