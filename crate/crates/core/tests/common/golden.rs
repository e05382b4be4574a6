//! Seed graphs at widths (4, 2, 4) and length 3, written out by hand.

pub struct Golden {
    lines: Vec<String>,
}

impl Golden {
    pub fn new() -> Self {
        let mut g = Golden { lines: Vec::new() };
        for (m, w) in [4, 2, 4].into_iter().enumerate() {
            g.push(format!("input m{m}+pos w={w} <- [] @m{m}"));
        }
        g
    }

    fn next(&self) -> usize {
        self.lines.len()
    }

    fn push(&mut self, body: String) -> usize {
        let id = self.next();
        self.lines.push(format!("{id} {body}"));
        id
    }

    /// Nine nodes of one Transformer layer on `x`; returns the layer output.
    fn transformer(&mut self, x: usize, w: usize, tag: &str) -> usize {
        let n = self.push(format!("layer_norm w={w} <- [{x}] @{tag}"));
        let a = self.push(format!("attention4h w={w} <- [{n}] @{tag}"));
        let r = self.push(format!("add w={w} <- [{a},{x}] @{tag}"));
        let n = self.push(format!("layer_norm w={w} <- [{r}] @{tag}"));
        let c = self.push(format!("conv1x1 w={} <- [{n}] @{tag}", 4 * w));
        let h = self.push(format!("relu w={} <- [{c}] @{tag}", 4 * w));
        let f = self.push(format!("add w={} <- [{h}] @{tag}", 4 * w));
        let c = self.push(format!("conv1x1 w={w} <- [{f}] @{tag}"));
        self.push(format!("add w={w} <- [{c},{r}] @{tag}"))
    }

    fn concat3(&mut self, outs: [usize; 3]) -> usize {
        let a = self.push(format!("concat w=6 <- [{},{}] @fusion", outs[0], outs[1]));
        self.push(format!("concat w=10 <- [{a},{}] @fusion", outs[2]))
    }
}

pub fn early() -> Vec<String> {
    let mut g = Golden::new();
    let mut outs = [0; 3];
    for (m, w) in [4, 2, 4].into_iter().enumerate() {
        let mut x = m;
        for _ in 0..3 {
            x = g.push(format!("add w={w} <- [{x}] @m{m}"));
        }
        outs[m] = x;
    }
    let x = g.concat3(outs);
    let x = g.transformer(x, 10, "fusion");
    let x = g.transformer(x, 10, "fusion");
    g.push(format!("output w=10 <- [{x}] @mixed"));
    g.lines
}

pub fn hybrid() -> Vec<String> {
    let mut g = Golden::new();
    let mut outs = [0; 3];
    for (m, w) in [4, 2, 4].into_iter().enumerate() {
        outs[m] = g.transformer(m, w, &format!("m{m}"));
    }
    let x = g.concat3(outs);
    let x = g.transformer(x, 10, "fusion");
    g.push(format!("output w=10 <- [{x}] @mixed"));
    g.lines
}

pub fn late() -> Vec<String> {
    let mut g = Golden::new();
    let mut outs = [0; 3];
    for (m, w) in [4, 2, 4].into_iter().enumerate() {
        let tag = format!("m{m}");
        let x = g.transformer(m, w, &tag);
        outs[m] = g.transformer(x, w, &tag);
    }
    g.push(format!("output w=10 <- [{},{},{}] @mixed", outs[0], outs[1], outs[2]));
    g.lines
}
