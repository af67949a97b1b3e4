//! Taylor jets of an expression: value and all partials up to third order.
//!
//! cargo run --example jets -- "(2+sin(y))^2" x,y 0,0

use foliage::expr::parse_expression;
use foliage::jet::{jet_eval, MAX_ORDER};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let text = args.get(1).map_or("(2+sin(y))^2", String::as_str);
    let coords: Vec<String> = args.get(2).map_or("x,y", String::as_str).split(',').map(String::from).collect();
    let point: Vec<f64> = args
        .get(3)
        .map_or("0,0", String::as_str)
        .split(',')
        .map(|s| s.trim().parse().expect("point components are numbers"))
        .collect();
    assert_eq!(coords.len(), point.len(), "one value per coordinate");
    let e = parse_expression(text).unwrap_or_else(|err| panic!("{err}"));
    let jet = jet_eval(&e, &coords, &point, MAX_ORDER).unwrap_or_else(|err| panic!("{err}"));
    println!("{e} at {point:?}");
    println!("  value {}", jet.value());
    let n = coords.len();
    let mut stack: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while let Some(idx) = stack.pop() {
        let name: String = idx.iter().map(|&i| coords[i].as_str()).collect::<Vec<_>>().join("");
        println!("  d{name:<6} {}", jet.d(&idx).unwrap());
        if idx.len() < MAX_ORDER {
            for j in (*idx.last().unwrap()..n).rev() {
                let mut next = idx.clone();
                next.push(j);
                stack.push(next);
            }
        }
    }
}
