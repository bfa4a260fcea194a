"""Regenerate the built-in lexicon files under src/agsc/stimuli/data."""
import itertools
import pathlib
OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "agsc" / "stimuli" / "data"

def reg(words, suffix="s"):
    return [(w, w + suffix) for w in words]

L = {}
# ---------------- English
en_nouns = reg("manager athlete farmer parent doctor author pilot surgeon dancer teacher customer executive guard banker chef client consultant driver engineer lawyer musician painter patient poet professor singer student writer baker soldier skater nurse judge mayor neighbor minister bike".split()) + [("woman", "women"), ("child", "children")]
en_short_n = reg("cat dog boy girl cow pig bird rat bee hen owl".split()) + [("man", "men")]
en_verbs = [(v + "s", v) for v in "observe investigate approve confuse like love admire criticize encourage hate interrupt remember understand know follow praise forgive mention recognize support thank visit defend respect ignore doubt greet trust protect warn blame avoid accept reward".split()] + [("discusses", "discuss"), ("watches", "watch")]
en_short_v = [(v + "s", v) for v in "see run eat sit win nap hop".split()] + [("goes", "go")]
L["en"] = dict(nouns=[(a, a, b, {}) for a, b in en_nouns], short_n=[(a, a, b, {}) for a, b in en_short_n],
    verbs=[(b, a, b, {}) for a, b in en_verbs], short_v=[(b, a, b, {}) for a, b in en_short_v],
    func=[("determiner", "the"), ("complementizer", "that")] + [("preposition", p) for p in "near behind beside above under".split()],
    filler=[("filler", "be", "is", "are")])
bigrams = [("coaxial", "cable"), ("police", "officer"), ("solar", "panel"), ("tropical", "storm"), ("nuclear", "reactor"), ("wooden", "spoon"), ("electric", "guitar"), ("chemical", "reaction"), ("stainless", "steel"), ("credit", "card"), ("grand", "piano"), ("spinal", "cord")]
semantic = [("square", "tv"), ("red", "apple"), ("yellow", "banana"), ("tall", "giraffe"), ("sharp", "knife"), ("hot", "coffee"), ("sweet", "candy"), ("loud", "drum"), ("soft", "pillow"), ("heavy", "anvil"), ("round", "ball"), ("green", "grass")]
plural = {"candy": "candies", "grass": "grasses", "coffee": "coffees"}
# ---------------- French (determiner fused into the noun token)
def fr(word, elide=False, fem=False):
    det = "l'" if elide else ("la_" if fem else "le_")
    return (word, det + word, "les_" + word + ("" if word.endswith(("s", "x")) else "s"), {})
fr_nouns = [fr(w, elide=True) for w in "homme auteur avocat étudiant écrivain ingénieur architecte athlète infirmier acteur".split()] + [fr(w) for w in "chef médecin pilote chirurgien sénateur danseur professeur client boulanger soldat banquier musicien peintre patient poète chanteur directeur fermier garde ministre juge maire voisin gérant parent".split()]
fr_short_n = [fr(w) for w in "chat chien roi loup rat coq cerf porc".split()]
fr_verbs = [("approuver", "approuve", "approuvent"), ("surveiller", "surveille", "surveillent"), ("aimer", "aime", "aiment"), ("féliciter", "félicite", "félicitent"), ("critiquer", "critique", "critiquent"), ("détester", "déteste", "détestent"), ("oublier", "oublie", "oublient"), ("guetter", "guette", "guettent"), ("interrompre", "interrompt", "interrompent"), ("connaître", "connaît", "connaissent"), ("comprendre", "comprend", "comprennent"), ("suivre", "suit", "suivent"), ("louer", "loue", "louent"), ("pardonner", "pardonne", "pardonnent"), ("mentionner", "mentionne", "mentionnent"), ("reconnaître", "reconnaît", "reconnaissent"), ("soutenir", "soutient", "soutiennent"), ("remercier", "remercie", "remercient"), ("visiter", "visite", "visitent"), ("regarder", "regarde", "regardent"), ("défendre", "défend", "défendent"), ("respecter", "respecte", "respectent"), ("confondre", "confond", "confondent"), ("étudier", "étudie", "étudient"), ("attendre", "attend", "attendent"), ("appeler", "appelle", "appellent"), ("écouter", "écoute", "écoutent"), ("saluer", "salue", "saluent"), ("protéger", "protège", "protègent"), ("avertir", "avertit", "avertissent"), ("blâmer", "blâme", "blâment"), ("éviter", "évite", "évitent"), ("accepter", "accepte", "acceptent"), ("punir", "punit", "punissent"), ("chercher", "cherche", "cherchent"), ("aider", "aide", "aident")]
fr_short_v = [("voir", "voit", "voient"), ("lire", "lit", "lisent"), ("dormir", "dort", "dorment"), ("courir", "court", "courent"), ("rire", "rit", "rient"), ("boire", "boit", "boivent")]
L["fr"] = dict(nouns=fr_nouns, short_n=fr_short_n, verbs=[(a, b, c, {}) for a, b, c in fr_verbs], short_v=[(a, b, c, {}) for a, b, c in fr_short_v],
    func=[("complementizer", "que")] + [("preposition", p) for p in "devant derrière avec sous contre".split()], filler=[])
# ---------------- German (feminine subjects: "die" is number-invariant in nominative/accusative)
def de(sg, pl):
    dpl = pl if pl.endswith(("n", "s")) else pl + "n"
    return (sg, sg, pl, {"dat_sg": "der_" + sg, "dat_pl": "den_" + dpl})
de_in = "Ärztin Lehrerin Sängerin Tänzerin Managerin Bäuerin Autorin Pilotin Chirurgin Senatorin Kundin Anwältin Bäckerin Soldatin Studentin Schriftstellerin Ingenieurin Architektin Bankerin Musikerin Malerin Patientin Dichterin Richterin Ministerin Nachbarin Freundin Kollegin Sportlerin Fahrerin Köchin Beraterin Direktorin Schauspielerin".split()
de_nouns = [de(w, w + "nen") for w in de_in] + [de("Frau", "Frauen"), de("Schwester", "Schwestern"), de("Tante", "Tanten"), de("Mutter", "Mütter"), de("Tochter", "Töchter")]
de_short_n = [de("Katze", "Katzen"), de("Kuh", "Kühe"), de("Maus", "Mäuse"), de("Ziege", "Ziegen"), de("Ente", "Enten"), de("Biene", "Bienen"), de("Eule", "Eulen"), de("Gans", "Gänse")]
de_verbs = [("wissen", "weiß", "wissen"), ("beobachten", "beobachtet", "beobachten"), ("lieben", "liebt", "lieben"), ("mögen", "mag", "mögen"), ("kennen", "kennt", "kennen"), ("verstehen", "versteht", "verstehen"), ("loben", "lobt", "loben"), ("vergeben", "vergibt", "vergeben"), ("hassen", "hasst", "hassen"), ("bewundern", "bewundert", "bewundern"), ("kritisieren", "kritisiert", "kritisieren"), ("ignorieren", "ignoriert", "ignorieren"), ("unterstützen", "unterstützt", "unterstützen"), ("besuchen", "besucht", "besuchen"), ("erwähnen", "erwähnt", "erwähnen"), ("erkennen", "erkennt", "erkennen"), ("verteidigen", "verteidigt", "verteidigen"), ("respektieren", "respektiert", "respektieren"), ("bezweifeln", "bezweifelt", "bezweifeln"), ("ermutigen", "ermutigt", "ermutigen"), ("untersuchen", "untersucht", "untersuchen"), ("billigen", "billigt", "billigen"), ("rufen", "ruft", "rufen"), ("hören", "hört", "hören"), ("fragen", "fragt", "fragen"), ("suchen", "sucht", "suchen"), ("grüßen", "grüßt", "grüßen"), ("vermissen", "vermisst", "vermissen"), ("warnen", "warnt", "warnen"), ("schützen", "schützt", "schützen"), ("tadeln", "tadelt", "tadeln"), ("meiden", "meidet", "meiden"), ("akzeptieren", "akzeptiert", "akzeptieren"), ("belohnen", "belohnt", "belohnen"), ("bestrafen", "bestraft", "bestrafen"), ("beneiden", "beneidet", "beneiden")]
de_short_v = [("sehen", "sieht", "sehen"), ("gehen", "geht", "gehen"), ("essen", "isst", "essen"), ("schlafen", "schläft", "schlafen"), ("lachen", "lacht", "lachen"), ("singen", "singt", "singen")]
L["de"] = dict(nouns=de_nouns, short_n=de_short_n, verbs=[(a, b, c, {}) for a, b, c in de_verbs], short_v=[(a, b, c, {}) for a, b, c in de_short_v],
    func=[("determiner", "die"), ("complementizer", "die")] + [("preposition", p) for p in "nahe neben hinter bei mit vor".split()], filler=[])
# ---------------- Dutch (de-words: "de" and relative "die" are number-invariant)
nl_pairs = [("schrijver", "schrijvers"), ("ouder", "ouders"), ("boer", "boeren"), ("leraar", "leraren"), ("dokter", "dokters"), ("arts", "artsen"), ("piloot", "piloten"), ("chirurg", "chirurgen"), ("danser", "dansers"), ("zanger", "zangers"), ("klant", "klanten"), ("advocaat", "advocaten"), ("bakker", "bakkers"), ("soldaat", "soldaten"), ("leerling", "leerlingen"), ("ingenieur", "ingenieurs"), ("architect", "architecten"), ("bankier", "bankiers"), ("muzikant", "muzikanten"), ("schilder", "schilders"), ("patiënt", "patiënten"), ("dichter", "dichters"), ("rechter", "rechters"), ("vrouw", "vrouwen"), ("directeur", "directeuren"), ("buurman", "buren"), ("kapper", "kappers"), ("koning", "koningen"), ("kok", "koks"), ("visser", "vissers"), ("verpleger", "verplegers"), ("agent", "agenten"), ("burgemeester", "burgemeesters"), ("fiets", "fietsen")]
nl_short_n = [("kat", "katten"), ("hond", "honden"), ("koe", "koeien"), ("muis", "muizen"), ("vis", "vissen"), ("geit", "geiten"), ("eend", "eenden"), ("uil", "uilen")]
nl_verbs = [("begrijpen", "begrijpt", "begrijpen"), ("observeren", "observeert", "observeren"), ("bewonderen", "bewondert", "bewonderen"), ("volgen", "volgt", "volgen"), ("prijzen", "prijst", "prijzen"), ("vergeven", "vergeeft", "vergeven"), ("roepen", "roept", "roepen"), ("haten", "haat", "haten"), ("bekritiseren", "bekritiseert", "bekritiseren"), ("negeren", "negeert", "negeren"), ("steunen", "steunt", "steunen"), ("bezoeken", "bezoekt", "bezoeken"), ("noemen", "noemt", "noemen"), ("herkennen", "herkent", "herkennen"), ("bedanken", "bedankt", "bedanken"), ("verdedigen", "verdedigt", "verdedigen"), ("respecteren", "respecteert", "respecteren"), ("betwijfelen", "betwijfelt", "betwijfelen"), ("onderzoeken", "onderzoekt", "onderzoeken"), ("horen", "hoort", "horen"), ("vragen", "vraagt", "vragen"), ("zoeken", "zoekt", "zoeken"), ("verwarren", "verwart", "verwarren"), ("missen", "mist", "missen"), ("waarderen", "waardeert", "waarderen"), ("groeten", "groet", "groeten"), ("vertrouwen", "vertrouwt", "vertrouwen"), ("helpen", "helpt", "helpen"), ("waarschuwen", "waarschuwt", "waarschuwen"), ("beschermen", "beschermt", "beschermen"), ("belonen", "beloont", "belonen"), ("straffen", "straft", "straffen"), ("vermijden", "vermijdt", "vermijden"), ("accepteren", "accepteert", "accepteren"), ("benijden", "benijdt", "benijden"), ("ontmoeten", "ontmoet", "ontmoeten")]
nl_short_v = [("zien", "ziet", "zien"), ("lopen", "loopt", "lopen"), ("eten", "eet", "eten"), ("slapen", "slaapt", "slapen"), ("zwemmen", "zwemt", "zwemmen"), ("zingen", "zingt", "zingen")]
L["nl"] = dict(nouns=[(a, a, b, {}) for a, b in nl_pairs], short_n=[(a, a, b, {}) for a, b in nl_short_n], verbs=[(a, b, c, {}) for a, b, c in nl_verbs], short_v=[(a, b, c, {}) for a, b, c in nl_short_v],
    func=[("determiner", "de"), ("complementizer", "die")] + [("preposition", p) for p in "achter naast bij voor onder met".split()], filler=[])
# ---------------- Finnish (postpositions take the genitive; the relative pronoun is fused with the head noun)
def fi(sg, pl, gsg, gpl):
    return (sg, sg, pl, {"gen_sg": gsg, "gen_pl": gpl, "rel_sg": sg + "_jota", "rel_pl": pl + "_joita"})
fi_rows = """täti tädit tädin tätien
opettaja opettajat opettajan opettajien
lääkäri lääkärit lääkärin lääkärien
kirjailija kirjailijat kirjailijan kirjailijoiden
luistelija luistelijat luistelijan luistelijoiden
laulaja laulajat laulajan laulajien
tanssija tanssijat tanssijan tanssijoiden
lentäjä lentäjät lentäjän lentäjien
kirurgi kirurgit kirurgin kirurgien
senaattori senaattorit senaattorin senaattorien
asiakas asiakkaat asiakkaan asiakkaiden
juristi juristit juristin juristien
leipuri leipurit leipurin leipurien
sotilas sotilaat sotilaan sotilaiden
opiskelija opiskelijat opiskelijan opiskelijoiden
insinööri insinöörit insinöörin insinöörien
arkkitehti arkkitehdit arkkitehdin arkkitehtien
pankkiiri pankkiirit pankkiirin pankkiirien
muusikko muusikot muusikon muusikoiden
maalari maalarit maalarin maalarien
potilas potilaat potilaan potilaiden
runoilija runoilijat runoilijan runoilijoiden
tuomari tuomarit tuomarin tuomarien
ministeri ministerit ministerin ministerien
naapuri naapurit naapurin naapurien
nainen naiset naisen naisten
mies miehet miehen miesten
johtaja johtajat johtajan johtajien
maanviljelijä maanviljelijät maanviljelijän maanviljelijöiden
puu puut puun puiden
näyttelijä näyttelijät näyttelijän näyttelijöiden
hoitaja hoitajat hoitajan hoitajien"""
fi_short_rows = """kissa kissat kissan kissojen
koira koirat koiran koirien
lehmä lehmät lehmän lehmien
hiiri hiiret hiiren hiirten
kala kalat kalan kalojen
vuohi vuohet vuohen vuohien
ankka ankat ankan ankkojen
pöllö pöllöt pöllön pöllöjen"""
fi_verbs = [("ymmärtää", "ymmärtää", "ymmärtävät"), ("kehua", "kehuu", "kehuvat"), ("tarkkailla", "tarkkailee", "tarkkailevat"), ("rakastaa", "rakastaa", "rakastavat"), ("ihailla", "ihailee", "ihailevat"), ("arvostella", "arvostelee", "arvostelevat"), ("vihata", "vihaa", "vihaavat"), ("tuntea", "tuntee", "tuntevat"), ("seurata", "seuraa", "seuraavat"), ("muistaa", "muistaa", "muistavat"), ("tukea", "tukee", "tukevat"), ("kiittää", "kiittää", "kiittävät"), ("tervehtiä", "tervehtii", "tervehtivät"), ("puolustaa", "puolustaa", "puolustavat"), ("kunnioittaa", "kunnioittaa", "kunnioittavat"), ("epäillä", "epäilee", "epäilevät"), ("rohkaista", "rohkaisee", "rohkaisevat"), ("tutkia", "tutkii", "tutkivat"), ("hyväksyä", "hyväksyy", "hyväksyvät"), ("kutsua", "kutsuu", "kutsuvat"), ("kuulla", "kuulee", "kuulevat"), ("etsiä", "etsii", "etsivät"), ("odottaa", "odottaa", "odottavat"), ("mainita", "mainitsee", "mainitsevat"), ("tunnistaa", "tunnistaa", "tunnistavat"), ("kuunnella", "kuuntelee", "kuuntelevat"), ("neuvoa", "neuvoo", "neuvovat"), ("auttaa", "auttaa", "auttavat"), ("varoittaa", "varoittaa", "varoittavat"), ("suojella", "suojelee", "suojelevat"), ("palkita", "palkitsee", "palkitsevat"), ("rangaista", "rankaisee", "rankaisevat"), ("välttää", "välttää", "välttävät"), ("kadehtia", "kadehtii", "kadehtivat"), ("tavata", "tapaa", "tapaavat"), ("syyttää", "syyttää", "syyttävät")]
fi_short_v = [("nähdä", "näkee", "näkevät"), ("syödä", "syö", "syövät"), ("nukkua", "nukkuu", "nukkuvat"), ("juosta", "juoksee", "juoksevat"), ("nauraa", "nauraa", "nauravat"), ("laulaa", "laulaa", "laulavat")]
L["fi"] = dict(nouns=[fi(*r.split()) for r in fi_rows.splitlines()], short_n=[fi(*r.split()) for r in fi_short_rows.splitlines()],
    verbs=[(a, b, c, {}) for a, b, c in fi_verbs], short_v=[(a, b, c, {}) for a, b, c in fi_short_v],
    func=[("postposition", p) for p in "lähellä takana vieressä edessä alla luona".split()], filler=[("complementizer", "joka", "jota", "joita")])

HEAD = {
 "en": "English. Determiner 'the' and complementizer 'that' are number-invariant.",
 "fr": "French. Determiners mark number, so each noun token carries its article (le_/la_/l'/les_).",
 "de": "German. Only feminine nouns: nominative/accusative 'die' and relative 'die' are number-invariant; dative forms for prepositional attractors are fused with their article.",
 "nl": "Dutch. Only de-words: determiner 'de' and relative 'die' are number-invariant.",
 "fi": "Finnish. Postpositions follow a genitive noun; the partitive relative pronoun (jota/joita) agrees with its head and is fused with it.",
}

def tagstr(tags):
    return ";".join(k if v is None else f"{k}={v}" for k, v in tags.items()) or "-"

for lang, d in L.items():
    lines = [f"# {HEAD[lang]}", "# columns: language pos lemma sg_form pl_form tags"]
    def emit(pos, lemma, sg, pl, tags):
        lines.append("\t".join([lang, pos, lemma, sg, pl, tagstr(tags)]))
    for kind, pos in (("n", "noun"), ("v", "verb")):
        orig = d["nouns"] if kind == "n" else d["verbs"]
        short = d["short_" + kind]
        for i, (lemma, sg, pl, tags) in enumerate(orig):
            emit(pos, lemma, sg, pl, {**tags, "short": short[i % len(short)][0]})
        for lemma, sg, pl, tags in short:
            emit(pos, lemma, sg, pl, {"short": None, **tags})
    for row in d["func"]:
        pos, w = row
        emit(pos, w, w, w, {})
    for pos, lemma, sg, pl in d["filler"]:
        emit(pos, lemma, sg, pl, {})
    if lang == "en":
        for adj, noun in bigrams:
            emit("adjective", adj, adj, adj, {"bigram": noun})
            emit("noun", noun, noun, plural.get(noun, noun + "s"), {"baseline": None})
        for adj, noun in semantic:
            emit("adjective", adj, adj, adj, {"semantic": noun})
            emit("noun", noun, noun, plural.get(noun, noun + "s"), {"baseline": None})
    with open(f"{OUT}/{lang}.tsv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(lang, len(lines))
