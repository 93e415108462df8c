//! Bundled entity lists the generator samples from.

pub const FIRST_NAMES_F: &[&str] = &[
    "Ana", "Carla", "Lucia", "Isabella", "Maria", "Sofia", "Emma", "Hannah", "Julia", "Lea", "Mia",
    "Nora", "Olivia", "Paula", "Rosa", "Sara", "Clara", "Elena", "Ines", "Greta", "Amara", "Yuki",
    "Priya", "Zoe",
];

pub const FIRST_NAMES_M: &[&str] = &[
    "Robert", "Jose", "Lukas", "Felix", "Jonas", "Mateo", "Noah", "Omar", "Pablo", "Tomas",
    "Victor", "David", "Elias", "Hugo", "Ivan", "Kenji", "Leon", "Marco", "Nils", "Rafael",
    "Samuel", "Theo", "Arjun", "Ben",
];

pub const LAST_NAMES: &[&str] = &[
    "Ruiz",
    "Díaz",
    "Hernández",
    "Miller",
    "Schmidt",
    "Novak",
    "Rossi",
    "Silva",
    "Tanaka",
    "Okafor",
    "Larsen",
    "Dubois",
    "Kowalski",
    "Moreau",
    "Fischer",
    "Costa",
    "Nakamura",
    "Patel",
    "Jansen",
    "Weber",
    "Lindqvist",
    "Moreno",
    "Castro",
    "Keller",
];

pub const CITIES: &[(&str, &str)] = &[
    ("Madrid", "Spain"),
    ("Barcelona", "Spain"),
    ("Berlin", "Germany"),
    ("Munich", "Germany"),
    ("Hamburg", "Germany"),
    ("Lyon", "France"),
    ("Paris", "France"),
    ("Milan", "Italy"),
    ("Rome", "Italy"),
    ("Lisbon", "Portugal"),
    ("Porto", "Portugal"),
    ("Vienna", "Austria"),
    ("Zurich", "Switzerland"),
    ("Amsterdam", "Netherlands"),
    ("Copenhagen", "Denmark"),
    ("Stockholm", "Sweden"),
    ("Krakow", "Poland"),
    ("Prague", "Czechia"),
    ("Dublin", "Ireland"),
    ("Edinburgh", "Scotland"),
];

/// Trip destinations by region.
pub const DESTINATIONS: &[(&str, &str, &str)] = &[
    ("Bali", "Indonesia", "Southeast Asia"),
    ("Bangkok", "Thailand", "Southeast Asia"),
    ("Hanoi", "Vietnam", "Southeast Asia"),
    ("Kyoto", "Japan", "East Asia"),
    ("Tokyo", "Japan", "East Asia"),
    ("Seoul", "Korea", "East Asia"),
    ("Athens", "Greece", "Mediterranean"),
    ("Valletta", "Malta", "Mediterranean"),
    ("Dubrovnik", "Croatia", "Mediterranean"),
    ("Naples", "Italy", "Mediterranean"),
    ("Reykjavik", "Iceland", "Nordics"),
    ("Bergen", "Norway", "Nordics"),
    ("Helsinki", "Finland", "Nordics"),
    ("Marrakesh", "Morocco", "North Africa"),
    ("Tunis", "Tunisia", "North Africa"),
    ("Lima", "Peru", "South America"),
    ("Cusco", "Peru", "South America"),
    ("Buenos Aires", "Argentina", "South America"),
    ("Vancouver", "Canada", "North America"),
    ("Boston", "USA", "North America"),
];

pub const REGIONS: &[&str] = &[
    "Southeast Asia",
    "East Asia",
    "Mediterranean",
    "Nordics",
    "North Africa",
    "South America",
    "North America",
];

pub const TRANSPORT: &[&str] = &["plane", "train", "car", "bus", "ferry"];

pub const MUSIC_GENRES: &[&str] = &[
    "funk",
    "jazz",
    "rock",
    "pop",
    "techno",
    "hiphop",
    "classical",
    "indie",
    "reggae",
    "soul",
];

/// Artists with their genre.
pub const ARTISTS: &[(&str, &str)] = &[
    ("The Grooves", "funk"),
    ("Brass Lantern", "funk"),
    ("Velvet Owls", "jazz"),
    ("Nina Solano", "jazz"),
    ("Iron Harbor", "rock"),
    ("Neon Foxes", "rock"),
    ("Lila Brandt", "pop"),
    ("Paper Comets", "pop"),
    ("Circuit Nine", "techno"),
    ("Kalt Strom", "techno"),
    ("MC Orbit", "hiphop"),
    ("Lowkey Pilot", "hiphop"),
    ("Aurora Quartet", "classical"),
    ("Helena Voss", "classical"),
    ("Quiet Atlas", "indie"),
    ("Moss Garden", "indie"),
    ("Island Roots", "reggae"),
    ("Sunny Kingston", "reggae"),
    ("Marvin Gold", "soul"),
    ("Ruby Lane", "soul"),
];

pub const SONG_WORDS_A: &[&str] = &[
    "Cosmic", "Golden", "Silent", "Electric", "Broken", "Midnight", "Velvet", "Crystal", "Wild",
    "Lonely", "Neon", "Paper", "Silver", "Burning", "Frozen", "Hidden",
];

pub const SONG_WORDS_B: &[&str] = &[
    "Funk", "River", "Heart", "Dream", "Highway", "Garden", "Skyline", "Echo", "Shadow", "Letter",
    "Ocean", "Mirror", "Harbor", "Signal", "Lantern", "Horizon",
];

pub const MOVIE_GENRES: &[&str] = &[
    "action",
    "comedy",
    "drama",
    "thriller",
    "animation",
    "documentary",
    "sci-fi",
];

pub const MOVIES: &[(&str, &str)] = &[
    ("Beverly Hills Cop III", "action"),
    ("Steel Horizon", "action"),
    ("The Last Courier", "action"),
    ("Paper Moons", "comedy"),
    ("Family Reunion", "comedy"),
    ("Two Left Feet", "comedy"),
    ("Quiet Waters", "drama"),
    ("The Long Winter", "drama"),
    ("Letters Home", "drama"),
    ("Night Signal", "thriller"),
    ("Glass Alibi", "thriller"),
    ("The Ninth Floor", "thriller"),
    ("Pebble and Pine", "animation"),
    ("Sky Whales", "animation"),
    ("Deep Currents", "documentary"),
    ("Mountains of Salt", "documentary"),
    ("Orbit Nine", "sci-fi"),
    ("Red Dust Colony", "sci-fi"),
];

pub const TV_GENRES: &[&str] = &["sitcom", "crime", "fantasy", "drama", "documentary"];

/// Series with genre and episode titles.
pub const SERIES: &[(&str, &str)] = &[
    ("Scrubs", "sitcom"),
    ("Office Hours", "sitcom"),
    ("Harbor Precinct", "crime"),
    ("Cold Trail", "crime"),
    ("Kingdom of Ash", "fantasy"),
    ("The Glass Tower", "fantasy"),
    ("Northern Line", "drama"),
    ("Second Chances", "drama"),
    ("Planet Below", "documentary"),
    ("Wild Kitchens", "documentary"),
];

pub const EPISODE_WORDS: &[&str] = &[
    "My Nickname",
    "The Return",
    "Fault Lines",
    "New Blood",
    "Open Doors",
    "The Trial",
    "Homecoming",
    "Night Shift",
    "Crossroads",
    "First Snow",
    "The Promise",
    "Loose Ends",
    "Old Friends",
    "The Storm",
    "Turning Point",
    "Aftermath",
];

pub const SHOPPING_CATEGORIES: &[&str] = &[
    "CDs & Vinyl",
    "Books",
    "Electronics",
    "Kitchen",
    "Garden",
    "Toys",
    "Sports",
    "Clothing",
    "Beauty",
];

/// Products with category and base price in EUR cents.
pub const PRODUCTS: &[(&str, &str, i64)] = &[
    ("Cosmic Funk", "CDs & Vinyl", 599),
    ("Blue Train Reissue", "CDs & Vinyl", 2499),
    ("Greatest Hits Box", "CDs & Vinyl", 3999),
    ("The Silent Coast", "Books", 1299),
    ("Atlas of Small Towns", "Books", 2450),
    ("Cooking for Friends", "Books", 1999),
    ("Wireless Earbuds", "Electronics", 7999),
    ("USB-C Charger", "Electronics", 1995),
    ("E-Reader", "Electronics", 12900),
    ("Chef Knife", "Kitchen", 4590),
    ("French Press", "Kitchen", 2399),
    ("Cast Iron Pan", "Kitchen", 3450),
    ("Garden Hose", "Garden", 2799),
    ("Tomato Seeds", "Garden", 349),
    ("Building Blocks", "Toys", 2999),
    ("Puzzle 1000 Pieces", "Toys", 1450),
    ("Yoga Mat", "Sports", 2495),
    ("Running Socks", "Sports", 999),
    ("Football", "Sports", 1999),
    ("Rain Jacket", "Clothing", 8900),
    ("Wool Scarf", "Clothing", 3200),
    ("Sun Cream", "Beauty", 1150),
    ("Face Serum", "Beauty", 2890),
];

pub const WORKOUT_TYPES: &[&str] = &[
    "soccer",
    "running",
    "weight training",
    "yoga",
    "swimming",
    "cycling",
    "tennis",
];

pub const HOBBIES: &[&str] = &[
    "photography",
    "chess",
    "hiking",
    "painting",
    "baking",
    "gardening",
    "climbing",
    "knitting",
    "guitar",
];

pub const CUISINES: &[&str] = &[
    "Greek", "Italian", "Japanese", "Mexican", "Indian", "Thai", "Spanish", "French",
];

/// Restaurants with their cuisine.
pub const RESTAURANTS: &[(&str, &str)] = &[
    ("The Parthenon", "Greek"),
    ("Olive Tree", "Greek"),
    ("Trattoria Roma", "Italian"),
    ("Luigi's Pizzeria", "Italian"),
    ("Sakura House", "Japanese"),
    ("Ramen Kaze", "Japanese"),
    ("Casa Maya", "Mexican"),
    ("El Taquero", "Mexican"),
    ("Spice Route", "Indian"),
    ("Curry Garden", "Indian"),
    ("Bangkok Kitchen", "Thai"),
    ("Lotus Thai", "Thai"),
    ("La Tasca", "Spanish"),
    ("Bodega Sol", "Spanish"),
    ("Le Petit Bistro", "French"),
    ("Chez Margot", "French"),
];

/// Non-restaurant meeting places with their place type.
pub const PLACES: &[(&str, &str)] = &[
    ("Central Park", "park"),
    ("Riverside Park", "park"),
    ("Blue Bean Cafe", "cafe"),
    ("Corner Cafe", "cafe"),
    ("The Copper Pot", "bar"),
    ("Harbor Lights Bar", "bar"),
    ("Odeon Cinema", "cinema"),
    ("City Museum", "museum"),
];

pub const MEETING_ACTIVITIES: &[(&str, &str)] = &[
    ("lunch", "restaurant"),
    ("dinner", "restaurant"),
    ("coffee", "cafe"),
    ("drinks", "bar"),
    ("walk", "park"),
    ("movie night", "cinema"),
    ("visit", "museum"),
];

/// Medical specialties with a typical reason.
pub const SPECIALTIES: &[(&str, &str)] = &[
    ("dentist", "dental checkup"),
    ("general practitioner", "annual checkup"),
    ("dermatologist", "skin screening"),
    ("ophthalmologist", "eye exam"),
    ("physiotherapist", "back pain"),
    ("cardiologist", "heart checkup"),
];

pub const JOB_TITLES: &[&str] = &[
    "Engineer",
    "Designer",
    "Analyst",
    "Teacher",
    "Nurse",
    "Architect",
    "Accountant",
    "Consultant",
    "Chemist",
    "Editor",
];

pub const COMPANIES: &[&str] = &[
    "Acme Systems",
    "Nordlicht Energy",
    "Blue Harbor Bank",
    "Orion Labs",
    "Vista Health",
    "Kestrel Media",
    "Granite Works",
    "Polaris Logistics",
];

pub const DEGREES: &[&str] = &[
    "Bachelor of Science",
    "Master of Arts",
    "Master of Science",
    "Bachelor of Arts",
];

pub const UNIVERSITIES: &[&str] = &[
    "University of Lisbon",
    "Technical University Munich",
    "University of Milan",
    "Sorbonne University",
    "University of Vienna",
    "Charles University",
];

pub const PET_KINDS: &[&str] = &["dog", "cat", "rabbit", "parrot", "hamster"];

pub const PET_NAMES: &[&str] = &[
    "Luna", "Max", "Bella", "Oscar", "Kiwi", "Pepper", "Milo", "Nala", "Rocky", "Coco",
];
