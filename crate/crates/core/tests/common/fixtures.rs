//! Two small SQLite databases and 35 tasks, five per structural type.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use keyinst::schema::{database_path, SchemaCatalog, TaskInstance};
use keyinst::sql::StructuralType;
use rusqlite::Connection;

const STORE: &str = "
CREATE TABLE shop (id INTEGER PRIMARY KEY, name TEXT, city TEXT, opened INTEGER, rating REAL);
CREATE TABLE employee (id INTEGER PRIMARY KEY, name TEXT, age INTEGER, shop_id INTEGER REFERENCES shop(id), salary REAL);
INSERT INTO shop VALUES
  (1, 'Alpha', 'Paris', 2001, 4.5), (2, 'Beta', 'Lyon', 1999, 3.8), (3, 'Gamma', 'Paris', 2010, 4.1),
  (4, 'Delta', 'Nice', 2005, 2.9), (5, 'Epsilon', 'Lyon', 2015, 4.8), (6, 'Zeta', 'Paris', 1995, 3.3);
INSERT INTO employee VALUES
  (1, 'Ann', 34, 1, 5200.0), (2, 'Bob', 45, 1, 6100.5), (3, 'Cid', 29, 2, 4100.0),
  (4, 'Dee', 52, 3, 7300.25), (5, 'Eve', 41, 3, 5900.0), (6, 'Fay', 23, 4, 3900.0),
  (7, 'Gus', 38, 5, 5000.0), (8, 'Hal', 61, 5, 8200.75), (9, 'Ivy', 27, 2, 4300.0);
";

const LIBRARY: &str = "
CREATE TABLE publisher (id INTEGER PRIMARY KEY, name TEXT, country TEXT);
CREATE TABLE book (id INTEGER PRIMARY KEY, title TEXT, writer TEXT, year INTEGER, price REAL, publisher_id INTEGER REFERENCES publisher(id));
INSERT INTO publisher VALUES (1, 'Penguin', 'UK'), (2, 'Knopf', 'USA'), (3, 'Gallimard', 'France'), (4, 'Tor', 'USA');
INSERT INTO book VALUES
  (1, 'Dune', 'Herbert', 1965, 9.99, 2), (2, 'Emma', 'Austen', 1815, 5.5, 1), (3, 'Ulysses', 'Joyce', 1922, 12.0, 1),
  (4, 'Hyperion', 'Simmons', 1989, 8.75, 4), (5, 'Candide', 'Voltaire', 1759, 4.25, 3), (6, 'Persuasion', 'Austen', 1817, 6.0, 1),
  (7, 'Foundation', 'Asimov', 1951, 7.5, 2), (8, 'Neuromancer', 'Gibson', 1984, 8.0, 4);
";

pub struct FixtureTask {
    pub ty: StructuralType,
    pub db: &'static str,
    pub question: &'static str,
    pub gold: &'static str,
    /// Same rows as `gold` in a different order.
    pub permuted: &'static str,
}

const fn t(
    ty: StructuralType,
    db: &'static str,
    question: &'static str,
    gold: &'static str,
    permuted: &'static str,
) -> FixtureTask {
    FixtureTask {
        ty,
        db,
        question,
        gold,
        permuted,
    }
}

use StructuralType::*;

pub const TASKS: [FixtureTask; 35] = [
    t(GroupBy, "store", "How many shops are in each city?",
      "SELECT city, count(*) FROM shop GROUP BY city",
      "SELECT city, count(*) FROM shop GROUP BY city ORDER BY 1 DESC"),
    t(GroupBy, "store", "What is the average employee age for each shop id?",
      "SELECT shop_id, avg(age) FROM employee GROUP BY shop_id",
      "SELECT shop_id, avg(age) FROM employee GROUP BY shop_id ORDER BY 1 DESC"),
    t(GroupBy, "library", "How many books does each publisher id have?",
      "SELECT publisher_id, count(*) FROM book GROUP BY publisher_id",
      "SELECT publisher_id, count(*) FROM book GROUP BY publisher_id ORDER BY 1 DESC"),
    t(GroupBy, "library", "What is the total price of books by each writer?",
      "SELECT writer, sum(price) FROM book GROUP BY writer",
      "SELECT writer, sum(price) FROM book GROUP BY writer ORDER BY 1 DESC"),
    t(GroupBy, "store", "What is the highest employee salary in each shop?",
      "SELECT T1.name, max(T2.salary) FROM shop AS T1 JOIN employee AS T2 ON T1.id = T2.shop_id GROUP BY T1.name",
      "SELECT T1.name, max(T2.salary) FROM shop AS T1 JOIN employee AS T2 ON T1.id = T2.shop_id GROUP BY T1.name ORDER BY 1 DESC"),
    t(Having, "store", "Which cities have at least two shops?",
      "SELECT city FROM shop GROUP BY city HAVING count(*) >= 2",
      "SELECT city FROM shop GROUP BY city HAVING count(*) >= 2 ORDER BY 1 DESC"),
    t(Having, "store", "Which shop ids employ more than one person, and how many?",
      "SELECT shop_id, count(*) FROM employee GROUP BY shop_id HAVING count(*) > 1",
      "SELECT shop_id, count(*) FROM employee GROUP BY shop_id HAVING count(*) > 1 ORDER BY 1 DESC"),
    t(Having, "library", "Which publisher ids have an average book price above 6?",
      "SELECT publisher_id, avg(price) FROM book GROUP BY publisher_id HAVING avg(price) > 6",
      "SELECT publisher_id, avg(price) FROM book GROUP BY publisher_id HAVING avg(price) > 6 ORDER BY 1 DESC"),
    t(Having, "library", "Which publishers published at least two books?",
      "SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id GROUP BY T2.name HAVING count(*) >= 2",
      "SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id GROUP BY T2.name HAVING count(*) >= 2 ORDER BY 1 DESC"),
    t(Having, "store", "Which shop ids pay some employee more than 6000?",
      "SELECT shop_id FROM employee GROUP BY shop_id HAVING max(salary) > 6000",
      "SELECT shop_id FROM employee GROUP BY shop_id HAVING max(salary) > 6000 ORDER BY 1 DESC"),
    t(OrderBy, "store", "List shop names from the oldest opening year to the newest.",
      "SELECT name FROM shop ORDER BY opened",
      "SELECT name FROM shop ORDER BY opened DESC"),
    t(OrderBy, "library", "List the writers of the books in ascending alphabetical order.",
      "SELECT writer FROM book ORDER BY writer ASC",
      "SELECT writer FROM book ORDER BY writer DESC"),
    t(OrderBy, "store", "List names and ages of employees older than 40, oldest first.",
      "SELECT name, age FROM employee WHERE age > 40 ORDER BY age DESC",
      "SELECT name, age FROM employee WHERE age > 40 ORDER BY age ASC"),
    t(OrderBy, "library", "List book titles and prices from most to least expensive.",
      "SELECT title, price FROM book ORDER BY price DESC, title",
      "SELECT title, price FROM book ORDER BY price ASC, title"),
    t(OrderBy, "store", "List each employee with their shop name, by employee name.",
      "SELECT T1.name, T2.name FROM employee AS T1 JOIN shop AS T2 ON T1.shop_id = T2.id ORDER BY T1.name",
      "SELECT T1.name, T2.name FROM employee AS T1 JOIN shop AS T2 ON T1.shop_id = T2.id ORDER BY T1.name DESC"),
    t(Limit, "store", "Who are the three best paid employees?",
      "SELECT name FROM employee ORDER BY salary DESC LIMIT 3",
      "SELECT name FROM (SELECT name, salary FROM employee ORDER BY salary DESC LIMIT 3) ORDER BY salary ASC"),
    t(Limit, "library", "What are the titles of the two oldest books?",
      "SELECT title FROM book ORDER BY year LIMIT 2",
      "SELECT title FROM (SELECT title, year FROM book ORDER BY year LIMIT 2) ORDER BY year DESC"),
    t(Limit, "store", "Which two shops have the best rating?",
      "SELECT name, rating FROM shop ORDER BY rating DESC LIMIT 2",
      "SELECT name, rating FROM (SELECT name, rating FROM shop ORDER BY rating DESC LIMIT 2) ORDER BY rating ASC"),
    t(Limit, "library", "Which publishers released the three most expensive books?",
      "SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id ORDER BY T1.price DESC LIMIT 3",
      "SELECT name FROM (SELECT T2.name, T1.price FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id ORDER BY T1.price DESC LIMIT 3) ORDER BY price ASC"),
    t(Limit, "store", "What are the two most recently opened shops in Paris?",
      "SELECT name FROM shop WHERE city = 'Paris' ORDER BY opened DESC LIMIT 2",
      "SELECT name FROM (SELECT name, opened FROM shop WHERE city = 'Paris' ORDER BY opened DESC LIMIT 2) ORDER BY opened ASC"),
    t(Except, "store", "Which shops have no employee older than 40?",
      "SELECT name FROM shop EXCEPT SELECT T1.name FROM shop AS T1 JOIN employee AS T2 ON T1.id = T2.shop_id WHERE T2.age > 40",
      "SELECT name FROM shop EXCEPT SELECT T1.name FROM shop AS T1 JOIN employee AS T2 ON T1.id = T2.shop_id WHERE T2.age > 40 ORDER BY 1 DESC"),
    t(Except, "store", "Which cities have no shop rated below 3?",
      "SELECT city FROM shop EXCEPT SELECT city FROM shop WHERE rating < 3",
      "SELECT city FROM shop EXCEPT SELECT city FROM shop WHERE rating < 3 ORDER BY 1 DESC"),
    t(Except, "library", "Which writers have no book from before 1900?",
      "SELECT writer FROM book EXCEPT SELECT writer FROM book WHERE year < 1900",
      "SELECT writer FROM book EXCEPT SELECT writer FROM book WHERE year < 1900 ORDER BY 1 DESC"),
    t(Except, "library", "Which publisher ids have no book priced above 9?",
      "SELECT id FROM publisher EXCEPT SELECT publisher_id FROM book WHERE price > 9",
      "SELECT id FROM publisher EXCEPT SELECT publisher_id FROM book WHERE price > 9 ORDER BY 1 DESC"),
    t(Except, "store", "Which employees do not earn more than 5000?",
      "SELECT name FROM employee EXCEPT SELECT name FROM employee WHERE salary > 5000",
      "SELECT name FROM employee EXCEPT SELECT name FROM employee WHERE salary > 5000 ORDER BY 1 DESC"),
    t(Intersect, "store", "Which cities have a shop opened before 2002 and a shop rated above 3.5?",
      "SELECT city FROM shop WHERE opened < 2002 INTERSECT SELECT city FROM shop WHERE rating > 3.5",
      "SELECT city FROM shop WHERE opened < 2002 INTERSECT SELECT city FROM shop WHERE rating > 3.5 ORDER BY 1 DESC"),
    t(Intersect, "store", "Which shop ids have an employee under 40 and an employee earning over 4000?",
      "SELECT shop_id FROM employee WHERE age < 40 INTERSECT SELECT shop_id FROM employee WHERE salary > 4000",
      "SELECT shop_id FROM employee WHERE age < 40 INTERSECT SELECT shop_id FROM employee WHERE salary > 4000 ORDER BY 1 DESC"),
    t(Intersect, "library", "Which writers have a book priced above 6 and a book from after 1900?",
      "SELECT writer FROM book WHERE price > 6 INTERSECT SELECT writer FROM book WHERE year > 1900",
      "SELECT writer FROM book WHERE price > 6 INTERSECT SELECT writer FROM book WHERE year > 1900 ORDER BY 1 DESC"),
    t(Intersect, "library", "Which publishers have both a pre-1900 book and a book under 6?",
      "SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id WHERE T1.year < 1900 INTERSECT SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id WHERE T1.price < 6",
      "SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id WHERE T1.year < 1900 INTERSECT SELECT T2.name FROM book AS T1 JOIN publisher AS T2 ON T1.publisher_id = T2.id WHERE T1.price < 6 ORDER BY 1 DESC"),
    t(Intersect, "store", "Which employees are older than 30 and earn less than 6000?",
      "SELECT name FROM employee WHERE age > 30 INTERSECT SELECT name FROM employee WHERE salary < 6000",
      "SELECT name FROM employee WHERE age > 30 INTERSECT SELECT name FROM employee WHERE salary < 6000 ORDER BY 1 DESC"),
    t(Union, "store", "Which shops are in Nice or rated above 4.4?",
      "SELECT name FROM shop WHERE city = 'Nice' UNION SELECT name FROM shop WHERE rating > 4.4",
      "SELECT name FROM shop WHERE city = 'Nice' UNION SELECT name FROM shop WHERE rating > 4.4 ORDER BY 1 DESC"),
    t(Union, "library", "Which writers have a book from before 1800 or a book priced above 9?",
      "SELECT writer FROM book WHERE year < 1800 UNION SELECT writer FROM book WHERE price > 9",
      "SELECT writer FROM book WHERE year < 1800 UNION SELECT writer FROM book WHERE price > 9 ORDER BY 1 DESC"),
    t(Union, "store", "Which employees are older than 50 or younger than 25?",
      "SELECT name FROM employee WHERE age > 50 UNION SELECT name FROM employee WHERE age < 25",
      "SELECT name FROM employee WHERE age > 50 UNION SELECT name FROM employee WHERE age < 25 ORDER BY 1 DESC"),
    t(Union, "library", "Which publishers are based in the USA or in France?",
      "SELECT name FROM publisher WHERE country = 'USA' UNION SELECT name FROM publisher WHERE country = 'France'",
      "SELECT name FROM publisher WHERE country = 'USA' UNION SELECT name FROM publisher WHERE country = 'France' ORDER BY 1 DESC"),
    t(Union, "store", "Which shop ids pay someone over 7000 or opened after 2008?",
      "SELECT shop_id FROM employee WHERE salary > 7000 UNION SELECT id FROM shop WHERE opened > 2008",
      "SELECT shop_id FROM employee WHERE salary > 7000 UNION SELECT id FROM shop WHERE opened > 2008 ORDER BY 1 DESC"),
];

/// (db, gold, prediction) pairs with equal results but different text.
pub const EQUIVALENT: [(&str, &str, &str); 5] = [
    ("store", "SELECT shop.name FROM shop", "SELECT name FROM shop"),
    (
        "store",
        "SELECT name, age FROM employee WHERE age > 40 ORDER BY age DESC",
        "SELECT e.name, e.age FROM employee AS e WHERE NOT e.age <= 40 ORDER BY e.age DESC",
    ),
    (
        "store",
        "SELECT name FROM employee EXCEPT SELECT name FROM employee WHERE salary > 5000",
        "SELECT name FROM employee WHERE salary <= 5000",
    ),
    (
        "store",
        "SELECT name FROM employee ORDER BY salary DESC LIMIT 3",
        "SELECT name FROM employee WHERE salary >= (SELECT salary FROM employee ORDER BY salary DESC LIMIT 1 OFFSET 2) ORDER BY salary DESC",
    ),
    ("store", "SELECT avg(rating) FROM shop", "SELECT sum(rating) / count(*) FROM shop"),
];

/// (db, gold, prediction) pairs whose results differ.
pub const WRONG: [(&str, &str, &str); 5] = [
    ("store", "SELECT city, count(*) FROM shop GROUP BY city", "SELECT city, count(*) FROM shop"),
    ("store", "SELECT name FROM shop ORDER BY opened", "SELECT name FROM shop WHERE opened > 2000 ORDER BY opened"),
    (
        "store",
        "SELECT name FROM employee WHERE age > 50 UNION SELECT name FROM employee WHERE age < 25",
        "SELECT name FROM employee WHERE age > 50",
    ),
    (
        "store",
        "SELECT city FROM shop GROUP BY city HAVING count(*) >= 2",
        "SELECT city FROM shop GROUP BY city HAVING count(*) > 2",
    ),
    (
        "store",
        "SELECT name FROM employee WHERE age > 30 INTERSECT SELECT name FROM employee WHERE salary < 6000",
        "SELECT name, age FROM employee WHERE age > 30 INTERSECT SELECT name, age FROM employee WHERE salary < 6000",
    ),
];

/// Creates `<root>/<db>/<db>.sqlite` for both databases and returns `root`.
pub fn build_databases(root: &Path) -> PathBuf {
    for (db, ddl) in [("store", STORE), ("library", LIBRARY)] {
        let path = database_path(root, db);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        let _ = std::fs::remove_file(&path);
        Connection::open(&path).unwrap().execute_batch(ddl).unwrap();
    }
    root.to_path_buf()
}

pub fn catalog(root: &Path) -> SchemaCatalog {
    SchemaCatalog::from_db_root(root).unwrap()
}

pub fn task(
    catalog: &SchemaCatalog,
    root: &Path,
    id: String,
    db: &str,
    question: &str,
    gold: &str,
    ty: Option<StructuralType>,
) -> TaskInstance {
    let schema: Arc<_> = catalog.get(db).unwrap();
    TaskInstance::new(
        id,
        schema,
        question,
        Some(gold.to_string()),
        database_path(root, db),
        ty,
    )
    .unwrap()
}

/// The 35 fixture tasks with ids `f00`..`f34`.
pub fn tasks(root: &Path) -> Vec<TaskInstance> {
    let catalog = catalog(root);
    TASKS
        .iter()
        .enumerate()
        .map(|(i, f)| {
            task(
                &catalog,
                root,
                format!("f{i:02}"),
                f.db,
                f.question,
                f.gold,
                Some(f.ty),
            )
        })
        .collect()
}
