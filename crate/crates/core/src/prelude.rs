//! The standard library, written in the exercise language itself.

use std::sync::OnceLock;

use crate::syntax::{parse_program, Program};
use crate::types::{infer_bindings, TypeEnv};

pub const SOURCE: &str = r#"
id x = x
const x y = x
flip f x y = f y x
not True = False
not False = True
otherwise = True
fst (a, b) = a
snd (a, b) = b
curry f a b = f (a, b)
uncurry f (a, b) = f a b
head (x:xs) = x
tail (x:xs) = xs
last [x] = x
last (x:xs) = last xs
init [x] = []
init (x:xs) = x : init xs
null [] = True
null (x:xs) = False
length [] = 0
length (x:xs) = 1 + length xs
sum [] = 0
sum (x:xs) = x + sum xs
product [] = 1
product (x:xs) = x * product xs
map f [] = []
map f (x:xs) = f x : map f xs
filter p [] = []
filter p (x:xs) | p x = x : filter p xs
                | otherwise = filter p xs
foldr f z [] = z
foldr f z (x:xs) = f x (foldr f z xs)
foldl f z [] = z
foldl f z (x:xs) = foldl f (f z x) xs
reverse xs = foldl (flip (:)) [] xs
append xs ys = xs ++ ys
concat xss = foldr (++) [] xss
concatMap f xs = concat (map f xs)
take n xs | n <= 0 = []
take n [] = []
take n (x:xs) = x : take (n - 1) xs
drop n xs | n <= 0 = xs
drop n [] = []
drop n (x:xs) = drop (n - 1) xs
zip (x:xs) (y:ys) = (x, y) : zip xs ys
zip xs ys = []
zipWith f (x:xs) (y:ys) = f x y : zipWith f xs ys
zipWith f xs ys = []
unzip [] = ([], [])
unzip ((a, b):rest) = (a : fst (unzip rest), b : snd (unzip rest))
elem y [] = False
elem y (x:xs) = x == y || elem y xs
min a b | a <= b = a
        | otherwise = b
max a b | a <= b = b
        | otherwise = a
minimum (x:xs) = foldr min x xs
maximum (x:xs) = foldr max x xs
insert x [] = [x]
insert x (y:ys) | x <= y = x : y : ys
                | otherwise = y : insert x ys
delete y [] = []
delete y (x:xs) | x == y = xs
                | otherwise = x : delete y xs
and xs = foldr (&&) True xs
or xs = foldr (||) False xs
all p xs = and (map p xs)
any p xs = or (map p xs)
replicate n x | n <= 0 = []
              | otherwise = x : replicate (n - 1) x
count y xs = length (filter (\x -> x == y) xs)
permutes [] ys = null ys
permutes (x:xs) ys = elem x ys && permutes xs (delete x ys)
nondescending (x:y:ys) = x <= y && nondescending (y:ys)
nondescending xs = True
"#;

/// The parsed library and its inferred schemes.
#[derive(Debug)]
pub struct Prelude {
    pub program: Program,
    pub types: TypeEnv,
}

impl Prelude {
    /// Type environment restricted to an exercise's allow-list.
    pub fn restricted(&self, allowed: &[String]) -> TypeEnv {
        self.types.restrict(allowed)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.program.bindings.iter().map(|b| b.name.as_str())
    }
}

pub fn prelude() -> &'static Prelude {
    static PRELUDE: OnceLock<Prelude> = OnceLock::new();
    PRELUDE.get_or_init(|| {
        let program = parse_program(SOURCE).expect("library source parses");
        let types = infer_bindings(&program.bindings, &TypeEnv::new()).expect("library source type-checks");
        Prelude { program, types }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_types() {
        let p = prelude();
        let insert = p.types.get("insert").unwrap();
        assert_eq!(insert.vars.len(), 1);
        assert_eq!(insert.ty.uncurry().0.len(), 2);
        let foldr = p.types.get("foldr").unwrap();
        assert_eq!(foldr.vars.len(), 2);
        let (args, _) = foldr.ty.uncurry();
        assert_eq!(args.len(), 3);
        assert_eq!(p.types.get("permutes").unwrap().ty.uncurry().1.to_string(), "Bool");
        assert_eq!(p.types.get("otherwise").unwrap().ty.to_string(), "Bool");
    }

    #[test]
    fn restriction() {
        let env = prelude().restricted(&["foldr".to_string(), "insert".to_string()]);
        assert!(env.contains("foldr"));
        assert!(!env.contains("map"));
    }
}
