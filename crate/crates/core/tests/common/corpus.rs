//! Student-like programs for the sorting exercise.

use tutor_core::eval::Value;

/// Partial attempts, each with at least one hole.
pub const WITH_HOLES: &[&str] = &[
    "my_sort = foldr ? []",
    "my_sort = foldr ? [0]",
    "my_sort = foldr insert ?",
    "my_sort = foldr (:) ?",
    "my_sort [] = []\nmy_sort (x:xs) = x : ?",
    "my_sort [] = ?\nmy_sort (x:xs) = insert x (my_sort xs)",
    "my_sort [] = []\nmy_sort (x:xs) = ? x (my_sort xs)",
    "my_sort [] = []\nmy_sort (x:xs) = insert ? (my_sort xs)",
    "my_sort [] = []\nmy_sort (x:xs) = insert x ?",
    "my_sort xs = reverse ?",
    "my_sort xs = ? ++ []",
    "my_sort = map ?",
    "my_sort xs = ? : xs",
    "my_sort xs = [?]",
    "my_sort xs = [?, ?]",
    "my_sort xs = filter ? xs",
    "my_sort xs = take ? xs",
    "my_sort [] = []\nmy_sort (x:xs) = ? ++ [x]",
    "my_sort [] = []\nmy_sort (x:xs) = my_sort xs ++ ?",
    "my_sort xs = case xs of\n  [] -> ?\n  (y:ys) -> insert y (my_sort ys)",
    "my_sort [] = []\nmy_sort [x] = [?]\nmy_sort (x:y:zs) = insert x (insert y (my_sort zs))",
    "my_sort xs = map (\\x -> ?) xs",
    "my_sort xs = ? (reverse xs)",
    "my_sort = foldl ? []",
    "my_sort xs = drop ? xs",
    "my_sort [] = []\nmy_sort (x:xs) = [x] ++ ?",
    "my_sort xs = ? xs xs",
    "my_sort (x:xs) = ?\nmy_sort [] = []",
    "my_sort xs = let n = ? in take n xs",
    "my_sort [] = [?]\nmy_sort (x:xs) = insert x (my_sort xs)",
    "my_sort = map ? . zip [0..]",
    "my_sort xs = zipWith ? xs xs",
    "my_sort [] = []\nmy_sort (x:xs) = foldr ? ? xs",
    "my_sort [] = []\nmy_sort (x:xs) = f x (my_sort xs)\n  where f y ys = ?",
    "my_sort [] = []\nmy_sort (x:xs) | x < 0 = ?\n               | otherwise = insert x (my_sort xs)",
    "my_sort [] = []\nmy_sort (x:xs) = insert x (? xs)",
];

/// Complete programs, right or wrong.
pub const GROUND: &[&str] = &[
    "my_sort = foldr insert []",
    "my_sort = foldr (:) []",
    "my_sort xs = reverse xs",
    "my_sort [] = []\nmy_sort (x:xs) = insert x (my_sort xs)",
    "my_sort [] = []\nmy_sort (p:xs) = my_sort (filter (\\y -> y < p) xs) ++ [p] ++ my_sort (filter (\\y -> y >= p) xs)",
    "my_sort xs = map (\\x -> x * 2) xs",
    "my_sort xs = take 2 xs ++ drop 3 xs",
    "my_sort = map snd . zip [0..]",
    "my_sort xs = zipWith (+) xs (tail xs ++ [0])",
    "my_sort [] = []\nmy_sort xs = m : my_sort (delete m xs)\n  where m = minimum xs",
    "my_sort xs = foldl (flip (:)) [] xs",
    "my_sort xs = concat (map (\\x -> [x, x]) xs)",
    "my_sort xs = filter (\\x -> x > 1) xs",
    "my_sort xs = let n = length xs in replicate n n",
    "my_sort xs = case xs of\n  [] -> [0]\n  (y:ys) -> ys ++ [y]",
    "my_sort xs = [sum xs, product xs, maximum (0:xs)]",
    "my_sort (x:y:rest) | x > y = y : my_sort (x:rest)\n                   | otherwise = x : my_sort (y:rest)\nmy_sort xs = xs",
    "my_sort xs = map fst (filter (\\p -> snd p > 0) (zip xs [0..]))",
    "my_sort xs = map (uncurry (+)) (zip xs (reverse xs))",
    "my_sort xs = length xs : map (min 2) xs",
    "my_sort xs = (\\f -> f (f xs)) reverse",
    "my_sort = foldr (\\x acc -> acc ++ [x]) []",
    "my_sort xs = [count 1 xs, count 2 xs]",
    "my_sort xs = evens xs\n  where evens [] = []\n        evens (y:ys) = y : odds ys\n        odds [] = []\n        odds (y:ys) = evens ys",
    "my_sort xs = take (length xs) [head xs..]",
    "my_sort xs = if_ (null xs) [] (init xs)\n  where if_ c a b = case c of\n          True -> a\n          False -> b",
    "my_sort xs = [last xs]",
    "my_sort xs = takeish 3 [1..]\n  where takeish 0 _ = []\n        takeish n (y:ys) = y : takeish (n - 1) ys",
];

/// Closed expressions evaluated with no program of their own.
pub const EXPRESSIONS: &[&str] = &[
    "take 4 [0..]",
    "[1..5]",
    "[3..1]",
    "foldr (\\x acc -> x + acc) 0 [1..10]",
    "map (\\p -> fst p * snd p) (zip [1..] [4,5,6])",
    "(reverse . map (\\x -> x + 1)) [1,2,3]",
    "length $ filter (\\x -> x > 2) [1,5,2,7]",
    "let ones = 1 : ones in take 3 ones",
    "head (drop 5 [1..])",
    "elem 3 [1..]",
    "unzip [(1, True), (2, False)]",
    "[1,2] < [1,3] && (2, 1) > (1, 9)",
    "[True, False] == [True, False] || null []",
    "case [1,2] of\n  (a:b:_) | a > b -> a\n          | otherwise -> b",
    "foldl (-) 10 [1,2,3]",
];

/// Inputs every ground program is run on.
pub fn sample_inputs() -> Vec<Value> {
    [
        &[][..],
        &[0],
        &[3],
        &[1, 0],
        &[0, 1],
        &[2, 2, 1],
        &[3, 1, 2],
        &[0, 1, 2, 3],
        &[3, 3, 0, 1],
        &[5, -1, 4, 0, 2, 2],
    ]
    .iter()
    .map(|xs| Value::ints(xs))
    .collect()
}

/// Inputs the brute-force soundness checks use.
pub fn probe_inputs() -> Vec<Value> {
    [&[][..], &[0], &[2], &[1, 0], &[0, 1], &[2, 1], &[2, 2, 1], &[3, 1, 2]]
        .iter()
        .map(|xs| Value::ints(xs))
        .collect()
}
