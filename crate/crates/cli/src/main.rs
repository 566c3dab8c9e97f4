fn main() {
    println!("tlabench");
}
