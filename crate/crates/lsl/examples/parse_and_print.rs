//! Tour of the text grammar: expressions, jet variables, arbitrary
//! functions, Greek aliases, vector-field and PDE documents, and the
//! print/parse round trip.
//!
//! Run with: cargo run --example parse_and_print

use lsl::lang::{parse_expr, parse_pde, parse_vectorfield, print_expr, print_vectorfield};

fn main() {
    // the model residual in the surface grammar
    let text = "4*pi*m*h^2*rho[t] + I*h^3*(rho[y,y]-rho[x,x]) + 32*pi^3*m^2*g*kB*T*(y-x)^2*rho";
    let residual = parse_expr(text).expect("parses");
    println!("input:     {text}");
    println!("canonical: {}", print_expr(&residual));
    assert_eq!(residual, lsl::model::canonical_model().residual().clone());

    // Greek aliases normalize to ASCII names
    let greek = parse_expr("γ*ρ[t] + ϖ''(y-x)").expect("parses");
    println!("\nfrom Greek input: {}", print_expr(&greek));

    // round trip: print then parse returns the same tree
    let e = parse_expr("exp(-(y-x)^2*t)*w(y-x)/h^2").expect("parses");
    let back = parse_expr(&print_expr(&e)).expect("reparses");
    println!("round trip stable: {}", e == back);

    // vector-field documents
    let vf = parse_vectorfield("xi_x = t; xi_y = t; xi_t = 0; eta = (2*pi*I*m/h)*(x-y)*rho")
        .expect("parses");
    println!("\nvector field: {}", print_vectorfield(&vf));

    // a rejected non-point coefficient
    let err = parse_vectorfield("xi_x=0; xi_y=0; xi_t=0; eta=rho[x]").unwrap_err();
    println!("point-symmetry guard: {err}");

    // .pde documents declare their symbols
    let doc = parse_pde(
        "vars x y t; dep rho; params m g kB T h;\n\
         eq 4*pi*m*h^2*rho[t] + I*h^3*(rho[y,y]-rho[x,x]) \
         + 32*pi^3*m^2*g*kB*T*(y-x)^2*rho = 0;",
    )
    .expect("parses");
    println!(
        "\n.pde residual matches the built-in model: {}",
        doc.residual == residual
    );
}
