//! Tseitin gate construction over a CaDiCaL instance.

use std::collections::HashMap;
use std::time::Instant;

pub type Lit = i32;

pub const TRUE: Lit = 1;
pub const FALSE: Lit = -1;

/// Stops the SAT search once a wall-clock deadline passes.
pub struct Deadline {
    pub at: Instant,
}

impl cadical::Callbacks for Deadline {
    fn terminate(&mut self) -> bool {
        Instant::now() >= self.at
    }
}

pub struct Cnf {
    pub sat: cadical::Solver<Deadline>,
    next: i32,
    ands: HashMap<(Lit, Lit), Lit>,
    xors: HashMap<(Lit, Lit), Lit>,
}

impl Cnf {
    pub fn new() -> Self {
        let mut sat = cadical::Solver::new();
        sat.add_clause([TRUE]);
        Cnf {
            sat,
            next: 2,
            ands: HashMap::new(),
            xors: HashMap::new(),
        }
    }

    pub fn fresh(&mut self) -> Lit {
        let v = self.next;
        self.next += 1;
        v
    }

    pub fn clause(&mut self, lits: &[Lit]) {
        if lits.contains(&TRUE) {
            return;
        }
        let reduced: Vec<Lit> = lits.iter().copied().filter(|&l| l != FALSE).collect();
        self.sat.add_clause(reduced);
    }

    pub fn and(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE || b == FALSE || a == -b {
            return FALSE;
        }
        if a == TRUE {
            return b;
        }
        if b == TRUE || a == b {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&g) = self.ands.get(&key) {
            return g;
        }
        let g = self.fresh();
        self.sat.add_clause([-g, a]);
        self.sat.add_clause([-g, b]);
        self.sat.add_clause([g, -a, -b]);
        self.ands.insert(key, g);
        g
    }

    pub fn or(&mut self, a: Lit, b: Lit) -> Lit {
        -self.and(-a, -b)
    }

    pub fn xor(&mut self, a: Lit, b: Lit) -> Lit {
        if a == FALSE {
            return b;
        }
        if b == FALSE {
            return a;
        }
        if a == TRUE {
            return -b;
        }
        if b == TRUE {
            return -a;
        }
        if a == b {
            return FALSE;
        }
        if a == -b {
            return TRUE;
        }
        // Normalise signs so that x^y and !x^!y share a gate.
        let (mut x, mut y, mut flip) = (a, b, false);
        if x < 0 {
            x = -x;
            flip = !flip;
        }
        if y < 0 {
            y = -y;
            flip = !flip;
        }
        let key = if x < y { (x, y) } else { (y, x) };
        let g = match self.xors.get(&key) {
            Some(&g) => g,
            None => {
                let g = self.fresh();
                self.sat.add_clause([-g, x, y]);
                self.sat.add_clause([-g, -x, -y]);
                self.sat.add_clause([g, -x, y]);
                self.sat.add_clause([g, x, -y]);
                self.xors.insert(key, g);
                g
            }
        };
        if flip {
            -g
        } else {
            g
        }
    }

    pub fn mux(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        if c == TRUE || t == e {
            return t;
        }
        if c == FALSE {
            return e;
        }
        if t == TRUE {
            return self.or(c, e);
        }
        if t == FALSE {
            return self.and(-c, e);
        }
        if e == TRUE {
            return self.or(-c, t);
        }
        if e == FALSE {
            return self.and(c, t);
        }
        let g = self.fresh();
        self.sat.add_clause([-c, -t, g]);
        self.sat.add_clause([-c, t, -g]);
        self.sat.add_clause([c, -e, g]);
        self.sat.add_clause([c, e, -g]);
        g
    }

    pub fn or_all(&mut self, lits: &[Lit]) -> Lit {
        if lits.contains(&TRUE) {
            return TRUE;
        }
        let mut live: Vec<Lit> = lits.iter().copied().filter(|&l| l != FALSE).collect();
        live.sort_unstable();
        live.dedup();
        match live.len() {
            0 => FALSE,
            1 => live[0],
            2 => self.or(live[0], live[1]),
            _ => {
                let g = self.fresh();
                let mut big = vec![-g];
                for &l in &live {
                    self.sat.add_clause([g, -l]);
                    big.push(l);
                }
                self.sat.add_clause(big);
                g
            }
        }
    }

    pub fn and_all(&mut self, lits: &[Lit]) -> Lit {
        let neg: Vec<Lit> = lits.iter().map(|l| -l).collect();
        -self.or_all(&neg)
    }

    pub fn value(&self, lit: Lit) -> bool {
        if lit == TRUE {
            return true;
        }
        if lit == FALSE {
            return false;
        }
        self.sat.value(lit).unwrap_or(false)
    }
}
