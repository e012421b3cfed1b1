use std::fmt::Write as _;

use thiserror::Error;

use super::{Channel, Joint, MotionSequence, Skeleton};

#[derive(Debug, Error, PartialEq)]
pub enum BvhError {
    #[error("line {line}: malformed header: {message}")]
    MalformedHeader { line: usize, message: String },

    #[error("line {line}: unknown channel name {name:?}")]
    UnknownChannel { line: usize, name: String },

    #[error("line {line}: channel count mismatch: expected {expected} values, found {found}")]
    ChannelCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: frame count mismatch: header declares {expected} frames, found {found}")]
    FrameCountMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: invalid number {token:?}")]
    InvalidNumber { line: usize, token: String },

    #[error("line {line}: missing MOTION section")]
    MissingMotion { line: usize },
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let t = self.items.get(self.pos).copied();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(self.last_line, |t| t.0)
    }

    fn expect(&mut self, word: &str) -> Result<usize, BvhError> {
        match self.next() {
            Some((line, tok)) if tok == word => Ok(line),
            Some((line, tok)) => Err(malformed(line, format!("expected {word:?}, found {tok:?}"))),
            None => Err(malformed(self.last_line, format!("expected {word:?}, found end of input"))),
        }
    }

    fn number(&mut self) -> Result<f64, BvhError> {
        match self.next() {
            Some((line, tok)) => parse_f64(line, tok),
            None => Err(malformed(self.last_line, "expected a number, found end of input".into())),
        }
    }
}

fn malformed(line: usize, message: String) -> BvhError {
    BvhError::MalformedHeader { line, message }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, BvhError> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| BvhError::InvalidNumber {
            line,
            token: tok.to_string(),
        })
}

/// Parse BVH text into a skeleton and its motion. Accepts LF and CRLF line endings.
pub fn parse_bvh(text: &str) -> Result<(Skeleton, MotionSequence), BvhError> {
    let lines: Vec<&str> = text.lines().collect();
    let motion_line = lines
        .iter()
        .position(|l| l.trim() == "MOTION")
        .ok_or(BvhError::MissingMotion { line: lines.len().max(1) })?;

    let items = lines[..motion_line]
        .iter()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut tokens = Tokens {
        items,
        pos: 0,
        last_line: motion_line + 1,
    };

    tokens.expect("HIERARCHY")?;
    tokens.expect("ROOT")?;
    let mut joints = Vec::new();
    parse_joint(&mut tokens, None, &mut joints)?;
    if let Some((line, tok)) = tokens.next() {
        return Err(malformed(line, format!("unexpected {tok:?} after root joint")));
    }

    let total: usize = joints.iter().map(|j| j.channels.len()).sum();
    let skeleton = Skeleton::new(joints).map_err(|e| malformed(1, e.to_string()))?;

    let mut rest = lines
        .iter()
        .enumerate()
        .skip(motion_line + 1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, frames_line) = rest
        .next()
        .ok_or_else(|| malformed(motion_line + 1, "missing \"Frames:\" header".into()))?;
    let frames_tok = frames_line
        .strip_prefix("Frames:")
        .ok_or_else(|| malformed(line, format!("expected \"Frames:\", found {frames_line:?}")))?
        .trim();
    let frames: usize = frames_tok
        .parse()
        .map_err(|_| malformed(line, format!("bad frame count {frames_tok:?}")))?;
    if frames == 0 {
        return Err(malformed(line, "frame count must be positive".into()));
    }

    let (line, time_line) = rest
        .next()
        .ok_or_else(|| malformed(line, "missing \"Frame Time:\" header".into()))?;
    let time_tok = time_line
        .strip_prefix("Frame Time:")
        .ok_or_else(|| malformed(line, format!("expected \"Frame Time:\", found {time_line:?}")))?
        .trim();
    let frame_time = parse_f64(line, time_tok)?;
    if frame_time <= 0.0 {
        return Err(malformed(line, format!("frame time {frame_time} must be positive")));
    }

    let mut values = Vec::with_capacity(frames * total);
    let mut found = 0;
    let mut last = line;
    for (line, row) in rest {
        last = line;
        let before = values.len();
        for tok in row.split_whitespace() {
            values.push(parse_f64(line, tok)?);
        }
        let n = values.len() - before;
        if n != total {
            return Err(BvhError::ChannelCountMismatch {
                line,
                expected: total,
                found: n,
            });
        }
        found += 1;
    }
    if found != frames {
        return Err(BvhError::FrameCountMismatch {
            line: last,
            expected: frames,
            found,
        });
    }

    let motion =
        MotionSequence::new(frame_time, total, values).map_err(|e| malformed(line, e.to_string()))?;
    Ok((skeleton, motion))
}

fn parse_joint(
    tokens: &mut Tokens<'_>,
    parent: Option<usize>,
    joints: &mut Vec<Joint>,
) -> Result<(), BvhError> {
    let (line, name) = tokens
        .next()
        .ok_or_else(|| malformed(tokens.last_line, "expected joint name".into()))?;
    if name == "{" {
        return Err(malformed(line, "joint is missing a name".into()));
    }
    tokens.expect("{")?;
    tokens.expect("OFFSET")?;
    let offset = [tokens.number()?, tokens.number()?, tokens.number()?];

    let line = tokens.expect("CHANNELS")?;
    let count = match tokens.next() {
        Some((l, tok)) => tok
            .parse::<usize>()
            .map_err(|_| malformed(l, format!("bad channel count {tok:?}")))?,
        None => return Err(malformed(line, "missing channel count".into())),
    };
    if count != 3 && count != 6 {
        return Err(malformed(line, format!("joint {name} declares {count} channels; expected 3 or 6")));
    }
    let mut channels = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, tok) = tokens
            .next()
            .ok_or_else(|| malformed(line, "missing channel name".into()))?;
        let ch = tok.parse::<Channel>().map_err(|_| BvhError::UnknownChannel {
            line: l,
            name: tok.to_string(),
        })?;
        channels.push(ch);
    }

    let index = joints.len();
    joints.push(Joint {
        name: name.to_string(),
        parent,
        offset,
        channels,
        end_site: None,
    });

    loop {
        let line = tokens.line();
        match tokens.next() {
            Some((_, "JOINT")) => parse_joint(tokens, Some(index), joints)?,
            Some((l, "End")) => {
                tokens.expect("Site")?;
                tokens.expect("{")?;
                tokens.expect("OFFSET")?;
                let site = [tokens.number()?, tokens.number()?, tokens.number()?];
                tokens.expect("}")?;
                if joints[index].end_site.replace(site).is_some() {
                    return Err(malformed(l, format!("joint {name} has two End Sites")));
                }
            }
            Some((_, "}")) => return Ok(()),
            Some((l, tok)) => return Err(malformed(l, format!("unexpected {tok:?} in joint {name}"))),
            None => return Err(malformed(line, format!("unterminated joint {name}"))),
        }
        if tokens.peek().is_none() {
            return Err(malformed(tokens.last_line, format!("unterminated joint {name}")));
        }
    }
}

/// Serialize to BVH text. Values are written with shortest round-trip
/// formatting, so parsing the output reproduces every value bit-exactly.
pub fn write_bvh(skeleton: &Skeleton, motion: &MotionSequence) -> String {
    let mut out = String::from("HIERARCHY\n");
    write_joint(&mut out, skeleton, 0, 0);
    out.push_str("MOTION\n");
    let _ = writeln!(out, "Frames: {}", motion.frame_count());
    let _ = writeln!(out, "Frame Time: {}", motion.frame_time());
    for t in 0..motion.frame_count() {
        let row: Vec<String> = motion.frame(t).iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn write_joint(out: &mut String, skeleton: &Skeleton, j: usize, depth: usize) {
    let pad = "\t".repeat(depth);
    let joint = &skeleton.joints()[j];
    let kind = if joint.parent.is_none() { "ROOT" } else { "JOINT" };
    let [x, y, z] = joint.offset;
    let _ = writeln!(out, "{pad}{kind} {}", joint.name);
    let _ = writeln!(out, "{pad}{{");
    let _ = writeln!(out, "{pad}\tOFFSET {x} {y} {z}");
    let names: Vec<&str> = joint.channels.iter().map(|c| c.as_str()).collect();
    let _ = writeln!(out, "{pad}\tCHANNELS {} {}", names.len(), names.join(" "));
    for (k, child) in skeleton.joints().iter().enumerate() {
        if child.parent == Some(j) {
            write_joint(out, skeleton, k, depth + 1);
        }
    }
    if let Some([x, y, z]) = joint.end_site {
        let _ = writeln!(out, "{pad}\tEnd Site");
        let _ = writeln!(out, "{pad}\t{{");
        let _ = writeln!(out, "{pad}\t\tOFFSET {x} {y} {z}");
        let _ = writeln!(out, "{pad}\t}}");
    }
    let _ = writeln!(out, "{pad}}}");
}
